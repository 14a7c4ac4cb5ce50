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

#include <set>

#include "doctest.h"
#include "negolab/error.h"

namespace negolab::tp {
namespace {

const Board kFigureBoard({5, 6, 7, 8, 9}, 15);

// Agents 2 and 3 (weights 7, 8) on red, agent 0 (weight 5) on green, agents
// 1 and 4 (weights 6, 9) on blue.
State FigureState(const Config& cfg) {
  Rng rng(0);
  State s = Reset(kFigureBoard, cfg, rng);
  s.poses[2].cell = {6, 1};
  s.poses[3].cell = {8, 2};
  s.poses[0].cell = {1, 7};
  s.poses[1].cell = {6, 13};
  s.poses[4].cell = {7, 12};
  s.demands = {2, 4, 3, 4, 4};
  return s;
}

TEST_CASE("figure scenario pays the red team their demands") {
  const Config cfg;
  State s = FigureState(cfg);
  const PatchStatus red = GetPatchStatus(s, cfg, 0);
  const PatchStatus green = GetPatchStatus(s, cfg, 1);
  const PatchStatus blue = GetPatchStatus(s, cfg, 2);
  CHECK(red.viable);
  CHECK(red.valid);
  CHECK(red.team == Coalition::FromMembers({2, 3}));
  CHECK_FALSE(green.viable);
  CHECK(blue.viable);
  CHECK_FALSE(blue.valid);
  CHECK(blue.demand_sum == 8);

  const std::vector<int> noop(5, kNoop);
  const StepResult r = Step(s, cfg, noop);
  CHECK(r.done);
  CHECK(r.rewards == std::vector<double>{0, 0, 3, 4, 0});
  CHECK(s.winning_patch == 0);
}

TEST_CASE("non-viable and over-demanding teams do not end the episode") {
  const Config cfg;
  State s = FigureState(cfg);
  s.poses[2].cell = {3, 7};
  s.poses[3].cell = {4, 7};  // red empties out
  const std::vector<int> noop(5, kNoop);
  const StepResult r = Step(s, cfg, noop);
  CHECK_FALSE(r.done);
  CHECK(r.rewards == std::vector<double>(5, 0.0));
}

TEST_CASE("patch status edge cases") {
  const Config cfg;
  Rng rng(1);
  State s = Reset(kFigureBoard, cfg, rng);
  const PatchStatus empty = GetPatchStatus(s, cfg, 0);
  CHECK_FALSE(empty.viable);
  CHECK(empty.valid);
  CHECK(empty.team.Empty());
  CHECK(empty.demand_sum == 0);
  CHECK_FALSE(empty.Agreement());
  s.poses[0].cell = {9, 2};  // bottom-right corner of red
  CHECK(GetPatchStatus(s, cfg, 0).team == Coalition::FromMembers({0}));
  // Unset demands block agreement even for a viable team.
  s.poses[3].cell = {5, 0};
  s.poses[4].cell = {5, 1};
  s.demands = {0, 0, 0, 3, 3};
  CHECK(GetPatchStatus(s, cfg, 0).viable);
  CHECK_FALSE(GetPatchStatus(s, cfg, 0).Agreement());
  CHECK_THROWS_AS(GetPatchStatus(s, cfg, 3), Error);
}

TEST_CASE("reset spawns in the center block deterministically") {
  const Config cfg;
  Rng a(12), b(12);
  const State s1 = Reset(kFigureBoard, cfg, a);
  const State s2 = Reset(kFigureBoard, cfg, b);
  CHECK(s1.poses == s2.poses);
  std::set<std::pair<int, int>> cells;
  for (const Pose& p : s1.poses) {
    CHECK(p.cell.row >= 6);
    CHECK(p.cell.row <= 8);
    CHECK(p.cell.col >= 6);
    CHECK(p.cell.col <= 8);
    cells.insert({p.cell.row, p.cell.col});
  }
  CHECK(cells.size() == 5);
  CHECK(s1.demands == std::vector<int>(5, 0));
  CHECK(s1.step == 0);
}

TEST_CASE("perturbed spawn distances") {
  Config cfg;
  cfg.patches = TwoPatches();
  cfg.allow_spawn_in_patch = true;
  for (int offset = 0; offset <= 10; ++offset) {
    const Cell c = CellAtPatchDistance(cfg, offset);
    CHECK(DistanceToNearestPatch(cfg, c) == offset);
  }
  CHECK_THROWS_AS(CellAtPatchDistance(cfg, 11), Error);
  cfg.spawn_overrides = {{4, CellAtPatchDistance(cfg, 0)}};
  Rng rng(2);
  const State s = Reset(kFigureBoard, cfg, rng);
  CHECK(DistanceToNearestPatch(cfg, s.poses[4].cell) == 0);

  cfg.allow_spawn_in_patch = false;
  try {
    Reset(kFigureBoard, cfg, rng);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}

TEST_CASE("movement is relative to orientation and blocked by walls and agents") {
  const Config cfg;
  Rng rng(3);
  State s = Reset(Board({5, 6}, 11), cfg, rng);
  s.poses[0] = Pose{{0, 0}, Orientation::kNorth};
  s.poses[1] = Pose{{0, 2}, Orientation::kEast};
  std::vector<int> act{kForward, kNoop};
  Step(s, cfg, act);
  CHECK(s.poses[0].cell == Cell{0, 0});  // wall
  act = {kRight, kBackward};             // both target (0, 1): agent 0 wins
  Step(s, cfg, act);
  CHECK(s.poses[0].cell == Cell{0, 1});
  CHECK(s.poses[1].cell == Cell{0, 2});
  act = {kRotateRight, kRotateLeft};
  Step(s, cfg, act);
  CHECK(s.poses[0].facing == Orientation::kEast);
  CHECK(s.poses[1].facing == Orientation::kNorth);
  act = {kBackward, kLeft};
  Step(s, cfg, act);
  CHECK(s.poses[0].cell == Cell{0, 0});
  CHECK(s.poses[1].cell == Cell{0, 1});
  act = {DemandAction(3), kNoop};
  Step(s, cfg, act);
  CHECK(s.demands[0] == 3);
  act = {NumActions(cfg.total_reward), kNoop};
  CHECK_THROWS_AS(Step(s, cfg, act), Error);
}

TEST_CASE("ego view is centered and rotated") {
  const Config cfg;
  Rng rng(4);
  State s = Reset(Board({5, 6}, 11), cfg, rng);
  s.poses[0] = Pose{{7, 3}, Orientation::kWest};
  s.poses[1] = Pose{{7, 2}, Orientation::kNorth};  // directly ahead of agent 0
  const int v = cfg.view_size, plane = v * v, half = v / 2;
  std::vector<double> view(NumViewChannels(2) * plane);
  EncodeView(s, cfg, 0, view);
  CHECK(view[(4 + 0) * plane + half * v + half] == 1.0);        // self at center
  CHECK(view[(4 + 1) * plane + (half - 1) * v + half] == 1.0);  // other one ahead
  CHECK(view[1 * plane + (half - 1) * v + half] == 1.0);        // red under it
  // Four steps ahead (column -1) is outside the grid: border.
  CHECK(view[0 * plane + (half - 4) * v + half] == 1.0);
  CHECK(view[0 * plane + (half - 3) * v + half] == 0.0);
}

TEST_CASE("random play keeps the grid invariants") {
  const Config cfg;
  Rng rng(21);
  const int num_actions = NumActions(cfg.total_reward);
  long steps = 0;
  int agreements = 0;
  while (steps < 100000) {
    State s = Reset(kFigureBoard, cfg, rng);
    while (!s.done) {
      std::vector<int> act(5);
      for (int& a : act) a = rng.UniformInt(num_actions);
      const StepResult r = Step(s, cfg, act);
      ++steps;
      std::set<std::pair<int, int>> cells;
      for (const Pose& p : s.poses) {
        CHECK(cfg.InGrid(p.cell));
        cells.insert({p.cell.row, p.cell.col});
      }
      CHECK(cells.size() == 5);
      CHECK(s.step <= cfg.max_steps);
      if (r.done && s.winning_patch >= 0) {
        ++agreements;
        const PatchStatus st = GetPatchStatus(s, cfg, s.winning_patch);
        double paid = 0;
        for (int i = 0; i < 5; ++i) {
          CHECK(r.rewards[i] == (st.team.Contains(i) ? s.demands[i] : 0));
          paid += r.rewards[i];
        }
        CHECK(paid <= cfg.total_reward);
        CHECK(paid == st.demand_sum);
      }
    }
  }
  CHECK(agreements > 0);
}

}  // namespace
}  // namespace negolab::tp
