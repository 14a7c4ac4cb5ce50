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

#ifndef NEGOLAB_TEAM_PATCHES_H_
#define NEGOLAB_TEAM_PATCHES_H_

// Spatial negotiation game on a grid with colored rectangular patches. Agents
// move, rotate and declare demands; a patch pays out once the agents standing
// on it form a viable team whose demands fit in the reward budget.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "negolab/coopgame.h"
#include "negolab/rng.h"

namespace negolab::tp {

enum class Color : std::uint8_t { kRed = 0, kGreen = 1, kBlue = 2 };
inline constexpr int kNumColors = 3;
const char* ColorName(Color color);

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

// Inclusive rectangle [row0, row1] x [col0, col1].
struct Patch {
  int row0 = 0, col0 = 0, row1 = 0, col1 = 0;
  Color color = Color::kRed;

  bool Contains(Cell c) const {
    return c.row >= row0 && c.row <= row1 && c.col >= col0 && c.col <= col1;
  }
};

// Red left, green top, blue right.
std::vector<Patch> DefaultPatches();
// Red left, blue right.
std::vector<Patch> TwoPatches();

struct Config {
  int height = 15;
  int width = 15;
  std::vector<Patch> patches = DefaultPatches();
  int total_reward = 7;
  int max_steps = 100;
  // Agents without an override spawn on distinct random cells of the square
  // block of side 2*spawn_radius+1 around spawn_center.
  Cell spawn_center{7, 7};
  int spawn_radius = 1;
  std::vector<std::pair<int, Cell>> spawn_overrides;
  bool allow_spawn_in_patch = false;
  int view_size = 11;

  void Validate(int n) const;
  bool InGrid(Cell c) const { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; }
  int PatchAt(Cell c) const;  // -1 when outside every patch
};

enum class Orientation : std::uint8_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

struct Pose {
  Cell cell;
  Orientation facing = Orientation::kNorth;
  bool operator==(const Pose&) const = default;
};

// Flat action indices: 0 forward, 1 backward, 2 left, 3 right, 4 rotate
// left, 5 rotate right, 6 noop, 7 + (k-1) set demand k for k in 1..r.
enum MoveAction : int {
  kForward = 0,
  kBackward = 1,
  kLeft = 2,
  kRight = 3,
  kRotateLeft = 4,
  kRotateRight = 5,
  kNoop = 6,
  kFirstDemand = 7,
};
inline int NumActions(int total_reward) { return kFirstDemand + total_reward; }
inline int DemandAction(int demand) { return kFirstDemand + demand - 1; }

struct State {
  Board board;
  std::vector<Pose> poses;
  std::vector<int> demands;  // 0 = not yet declared
  int step = 0;
  bool done = false;
  int winning_patch = -1;
  std::optional<std::vector<double>> terminal_rewards;

  int n() const { return board.n(); }
};

struct PatchStatus {
  bool viable = false;  // nonempty team with weight >= q
  bool valid = true;    // sum of demands <= r
  bool all_demands_set = true;
  Coalition team;
  int demand_sum = 0;

  // Viable, valid, every member has declared, and something was demanded.
  bool Agreement() const { return viable && valid && all_demands_set && demand_sum > 0; }
};

PatchStatus GetPatchStatus(const State& state, const Config& config, int patch);

State Reset(const Board& board, const Config& config, Rng& rng);

struct StepResult {
  bool done = false;
  std::vector<double> rewards;
};

// One flat action per agent. Moves are resolved in agent-index order; a move
// into a wall or an occupied cell does nothing. After moves and demands, the
// lowest-index patch holding an agreement ends the episode and pays its team
// their demands. Reaching max_steps ends it with zero reward.
StepResult Step(State& state, const Config& config, std::span<const int> actions);

// Ego-centric view, rotated so the agent faces up. Channel-major layout
// [channel][row][col] with channels: border, red, green, blue, then one per
// agent (absolute index).
int NumViewChannels(int n);
void EncodeView(const State& state, const Config& config, int agent, std::span<double> out);
// One-hot self (n), w_i/q (n), d_i/r (n).
int VectorFeatureSize(int n);
void EncodeVectorFeatures(const State& state, const Config& config, int agent,
                          std::span<double> out);

int DistanceToNearestPatch(const Config& config, Cell cell);
// A cell at exactly `offset` L1 steps from the nearest patch, on a staircase
// walking up and right from the top-right corner of patch 0. Throws
// kConfig when no such cell exists inside the grid.
Cell CellAtPatchDistance(const Config& config, int offset);

std::string Render(const State& state, const Config& config);

class TrajectoryLog {
 public:
  explicit TrajectoryLog(std::ostream& out) : out_(&out) {}
  void Record(int episode, const State& after, std::span<const int> actions,
              const StepResult& result);

 private:
  std::ostream* out_;
};

}  // namespace negolab::tp

#endif  // NEGOLAB_TEAM_PATCHES_H_
