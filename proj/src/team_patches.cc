// Copyright 2026 The Negolab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "negolab/team_patches.h"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "negolab/error.h"

namespace negolab::tp {

const char* ColorName(Color color) {
  switch (color) {
    case Color::kRed: return "red";
    case Color::kGreen: return "green";
    case Color::kBlue: return "blue";
  }
  return "?";
}

std::vector<Patch> DefaultPatches() {
  return {Patch{5, 0, 9, 2, Color::kRed}, Patch{0, 5, 2, 9, Color::kGreen},
          Patch{5, 12, 9, 14, Color::kBlue}};
}

std::vector<Patch> TwoPatches() {
  return {Patch{5, 0, 9, 2, Color::kRed}, Patch{5, 12, 9, 14, Color::kBlue}};
}

int Config::PatchAt(Cell c) const {
  for (std::size_t k = 0; k < patches.size(); ++k) {
    if (patches[k].Contains(c)) return static_cast<int>(k);
  }
  return -1;
}

void Config::Validate(int n) const {
  Require(height >= 1 && width >= 1, ErrorCode::kConfig, "grid must be nonempty");
  Require(total_reward >= 1, ErrorCode::kConfig, "total reward must be >= 1");
  Require(max_steps >= 1, ErrorCode::kConfig, "max_steps must be >= 1");
  Require(view_size >= 1 && view_size % 2 == 1, ErrorCode::kConfig, "view size must be odd");
  Require(!patches.empty(), ErrorCode::kConfig, "need at least one patch");
  for (std::size_t a = 0; a < patches.size(); ++a) {
    const Patch& p = patches[a];
    Require(p.row0 <= p.row1 && p.col0 <= p.col1 && InGrid({p.row0, p.col0}) &&
                InGrid({p.row1, p.col1}),
            ErrorCode::kConfig, "patch " + std::to_string(a) + " is not inside the grid");
    for (std::size_t b = 0; b < a; ++b) {
      const Patch& q = patches[b];
      const bool overlap = p.row0 <= q.row1 && q.row0 <= p.row1 && p.col0 <= q.col1 &&
                           q.col0 <= p.col1;
      Require(!overlap, ErrorCode::kConfig, "patches overlap");
    }
  }
  for (const auto& [agent, cell] : spawn_overrides) {
    Require(agent >= 0 && agent < n, ErrorCode::kConfig, "spawn override for unknown agent");
    Require(InGrid(cell), ErrorCode::kConfig, "spawn override outside the grid");
    Require(allow_spawn_in_patch || PatchAt(cell) < 0, ErrorCode::kConfig,
            "spawn cell inside a patch");
  }
}

namespace {

Cell Forward(Orientation o) {
  switch (o) {
    case Orientation::kNorth: return {-1, 0};
    case Orientation::kEast: return {0, 1};
    case Orientation::kSouth: return {1, 0};
    case Orientation::kWest: return {0, -1};
  }
  return {0, 0};
}

Orientation Turn(Orientation o, int quarter_turns) {
  return static_cast<Orientation>((static_cast<int>(o) + quarter_turns + 4) % 4);
}

}  // namespace

State Reset(const Board& board, const Config& config, Rng& rng) {
  const int n = board.n();
  config.Validate(n);
  State state{board};
  state.poses.assign(n, Pose{});
  state.demands.assign(n, 0);
  std::vector<bool> placed(n, false);
  std::vector<Cell> taken;
  for (const auto& [agent, cell] : config.spawn_overrides) {
    Require(!placed[agent], ErrorCode::kConfig, "duplicate spawn override");
    Require(std::find(taken.begin(), taken.end(), cell) == taken.end(), ErrorCode::kConfig,
            "spawn overrides collide");
    state.poses[agent].cell = cell;
    placed[agent] = true;
    taken.push_back(cell);
  }
  std::vector<Cell> block;
  for (int dr = -config.spawn_radius; dr <= config.spawn_radius; ++dr) {
    for (int dc = -config.spawn_radius; dc <= config.spawn_radius; ++dc) {
      const Cell c{config.spawn_center.row + dr, config.spawn_center.col + dc};
      if (!config.InGrid(c)) continue;
      if (!config.allow_spawn_in_patch && config.PatchAt(c) >= 0) continue;
      if (std::find(taken.begin(), taken.end(), c) != taken.end()) continue;
      block.push_back(c);
    }
  }
  const int need = static_cast<int>(std::count(placed.begin(), placed.end(), false));
  Require(static_cast<int>(block.size()) >= need, ErrorCode::kConfig,
          "spawn block too small for " + std::to_string(need) + " agents");
  std::shuffle(block.begin(), block.end(), rng.engine());
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (!placed[i]) state.poses[i].cell = block[next++];
    state.poses[i].facing = static_cast<Orientation>(rng.UniformInt(4));
  }
  return state;
}

PatchStatus GetPatchStatus(const State& state, const Config& config, int patch) {
  Require(patch >= 0 && patch < static_cast<int>(config.patches.size()), ErrorCode::kPrecondition,
          "no patch " + std::to_string(patch));
  PatchStatus status;
  const Patch& p = config.patches[patch];
  std::uint32_t mask = 0;
  for (int i = 0; i < state.n(); ++i) {
    if (!p.Contains(state.poses[i].cell)) continue;
    mask |= 1u << i;
    status.demand_sum += state.demands[i];
    if (state.demands[i] == 0) status.all_demands_set = false;
  }
  status.team = Coalition(mask);
  status.viable = !status.team.Empty() && state.board.Wins(status.team);
  status.valid = status.demand_sum <= config.total_reward;
  return status;
}

StepResult Step(State& state, const Config& config, std::span<const int> actions) {
  const int n = state.n();
  Require(!state.done, ErrorCode::kIllegalAction, "episode already terminated");
  Require(static_cast<int>(actions.size()) == n, ErrorCode::kIllegalAction,
          "one action per agent required");
  const int num_actions = NumActions(config.total_reward);
  for (int a : actions) {
    Require(a >= 0 && a < num_actions, ErrorCode::kIllegalAction,
            "action " + std::to_string(a) + " out of range");
  }
  auto occupied = [&](Cell c) {
    for (const Pose& p : state.poses) {
      if (p.cell == c) return true;
    }
    return false;
  };
  for (int i = 0; i < n; ++i) {
    Pose& pose = state.poses[i];
    const int a = actions[i];
    if (a >= kFirstDemand) {
      state.demands[i] = a - kFirstDemand + 1;
      continue;
    }
    if (a == kRotateLeft) {
      pose.facing = Turn(pose.facing, -1);
      continue;
    }
    if (a == kRotateRight) {
      pose.facing = Turn(pose.facing, 1);
      continue;
    }
    if (a == kNoop) continue;
    const int turn = a == kForward ? 0 : a == kRight ? 1 : a == kBackward ? 2 : 3;
    const Cell d = Forward(Turn(pose.facing, turn));
    const Cell target{pose.cell.row + d.row, pose.cell.col + d.col};
    if (config.InGrid(target) && !occupied(target)) pose.cell = target;
  }
  ++state.step;

  StepResult result;
  result.rewards.assign(n, 0.0);
  for (int k = 0; k < static_cast<int>(config.patches.size()); ++k) {
    const PatchStatus status = GetPatchStatus(state, config, k);
    if (!status.Agreement()) continue;
    for (int i : status.team.Members()) result.rewards[i] = state.demands[i];
    state.done = true;
    state.winning_patch = k;
    break;
  }
  if (!state.done && state.step >= config.max_steps) state.done = true;
  if (state.done) state.terminal_rewards = result.rewards;
  result.done = state.done;
  return result;
}

int NumViewChannels(int n) { return 1 + kNumColors + n; }

void EncodeView(const State& state, const Config& config, int agent, std::span<double> out) {
  const int n = state.n();
  const int v = config.view_size;
  const int plane = v * v;
  Require(static_cast<int>(out.size()) == NumViewChannels(n) * plane, ErrorCode::kContract,
          "view buffer has the wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  const Pose& self = state.poses[agent];
  const Cell f = Forward(self.facing);
  const Cell right = Forward(Turn(self.facing, 1));
  const int half = v / 2;
  for (int vr = 0; vr < v; ++vr) {
    for (int vc = 0; vc < v; ++vc) {
      const int ahead = half - vr;
      const int side = vc - half;
      const Cell c{self.cell.row + ahead * f.row + side * right.row,
                   self.cell.col + ahead * f.col + side * right.col};
      const int pixel = vr * v + vc;
      if (!config.InGrid(c)) {
        out[pixel] = 1.0;
        continue;
      }
      const int patch = config.PatchAt(c);
      if (patch >= 0) {
        out[(1 + static_cast<int>(config.patches[patch].color)) * plane + pixel] = 1.0;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    const Cell d{state.poses[j].cell.row - self.cell.row, state.poses[j].cell.col - self.cell.col};
    // Invert the view transform: ahead = d . f, side = d . right.
    const int ahead = d.row * f.row + d.col * f.col;
    const int side = d.row * right.row + d.col * right.col;
    const int vr = half - ahead, vc = half + side;
    if (vr < 0 || vr >= v || vc < 0 || vc >= v) continue;
    out[(1 + kNumColors + j) * plane + vr * v + vc] = 1.0;
  }
}

int VectorFeatureSize(int n) { return 3 * n; }

void EncodeVectorFeatures(const State& state, const Config& config, int agent,
                          std::span<double> out) {
  const int n = state.n();
  Require(static_cast<int>(out.size()) == VectorFeatureSize(n), ErrorCode::kContract,
          "vector feature buffer has the wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  out[agent] = 1.0;
  for (int i = 0; i < n; ++i) {
    out[n + i] = state.board.weight(i) / state.board.quota();
    out[2 * n + i] = static_cast<double>(state.demands[i]) / config.total_reward;
  }
}

int DistanceToNearestPatch(const Config& config, Cell cell) {
  int best = -1;
  for (const Patch& p : config.patches) {
    const int dr = cell.row < p.row0 ? p.row0 - cell.row : (cell.row > p.row1 ? cell.row - p.row1 : 0);
    const int dc = cell.col < p.col0 ? p.col0 - cell.col : (cell.col > p.col1 ? cell.col - p.col1 : 0);
    if (best < 0 || dr + dc < best) best = dr + dc;
  }
  return best;
}

Cell CellAtPatchDistance(const Config& config, int offset) {
  Require(offset >= 0, ErrorCode::kConfig, "offset must be nonnegative");
  const Patch& p = config.patches.at(0);
  Cell c{p.row0, p.col1};
  for (int s = 1; s <= offset; ++s) {
    const Cell up{c.row - 1, c.col};
    const Cell right{c.row, c.col + 1};
    const bool prefer_up = s % 2 == 1;
    const Cell first = prefer_up ? up : right;
    const Cell second = prefer_up ? right : up;
    if (config.InGrid(first) && DistanceToNearestPatch(config, first) == s) {
      c = first;
    } else if (config.InGrid(second) && DistanceToNearestPatch(config, second) == s) {
      c = second;
    } else {
      Fail(ErrorCode::kConfig, "no cell at patch distance " + std::to_string(offset));
    }
  }
  return c;
}

std::string Render(const State& state, const Config& config) {
  std::vector<std::string> rows(config.height, std::string(config.width, '.'));
  for (const Patch& p : config.patches) {
    const char mark = "rgb"[static_cast<int>(p.color)];
    for (int r = p.row0; r <= p.row1; ++r) {
      for (int c = p.col0; c <= p.col1; ++c) rows[r][c] = mark;
    }
  }
  for (int i = 0; i < state.n(); ++i) {
    const Cell c = state.poses[i].cell;
    rows[c.row][c.col] = static_cast<char>('0' + i % 10);
  }
  std::ostringstream out;
  for (const std::string& r : rows) out << r << '\n';
  return out.str();
}

void TrajectoryLog::Record(int episode, const State& after, std::span<const int> actions,
                           const StepResult& result) {
  std::ostream& out = *out_;
  out << "episode=" << episode << " step=" << after.step << " actions=";
  for (std::size_t i = 0; i < actions.size(); ++i) out << (i ? "," : "") << actions[i];
  out << " poses=";
  for (int i = 0; i < after.n(); ++i) {
    const Pose& p = after.poses[i];
    out << (i ? ";" : "") << p.cell.row << ',' << p.cell.col << ','
        << "NESW"[static_cast<int>(p.facing)];
  }
  out << " demands=";
  for (int i = 0; i < after.n(); ++i) out << (i ? "," : "") << after.demands[i];
  out << " rewards=";
  for (std::size_t i = 0; i < result.rewards.size(); ++i) {
    out << (i ? "," : "") << result.rewards[i];
  }
  out << " done=" << (result.done ? 1 : 0) << '\n';
}

}  // namespace negolab::tp
