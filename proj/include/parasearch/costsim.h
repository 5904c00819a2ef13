// Copyright 2026 The parasearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef PARASEARCH_COSTSIM_H_
#define PARASEARCH_COSTSIM_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "parasearch/catalog.h"
#include "parasearch/strategy.h"

namespace parasearch {

enum class OpKind {
  kMatmulQkv,
  kMatmulAttnScore,
  kMatmulAttnCtx,
  kMatmulProj,
  kMatmulMlpUp,
  kMatmulMlpDown,
  kEmbed,
  kLogits,
};

enum class CommKind {
  kTpAllreduce,
  kTpAllgather,
  kTpReducescatter,
  kP2pActivation,
  kDpAllreduce,
  kDpReducescatterGather,
};

enum class Phase { kForward, kBackward, kRecompute };
enum class LinkScope { kIntraNode, kInterNode };

const char* to_string(OpKind k);
const char* to_string(CommKind k);
const char* to_string(Phase p);
const char* to_string(LinkScope s);

/// One compute operator; `count` repeats it (e.g. once per layer).
struct OpDesc {
  OpKind kind = OpKind::kMatmulQkv;
  double theta_flops = 0;
  Phase phase = Phase::kForward;
  int64_t count = 1;
};

/// One communication operator. `theta_bytes` is the payload; the collective
/// factor is applied by op_comm_time.
struct CommDesc {
  CommKind kind = CommKind::kP2pActivation;
  double theta_bytes = 0;
  LinkScope scope = LinkScope::kIntraNode;
  int64_t group_size = 2;
  Phase phase = Phase::kForward;
  int64_t count = 1;
};

/// Bytes actually moved per rank: 2(g-1)/g for allreduce (and the
/// reduce-scatter + all-gather pair), (g-1)/g for one all-gather or
/// reduce-scatter, 1 for p2p.
double collective_factor(CommKind kind, int64_t group_size);

/// Coarse operator class used as the efficiency lookup key.
enum class KindClass { kMatmul, kEmbed, kAllreduce, kAllgather, kReducescatter, kP2p };
inline constexpr size_t kNumKindClasses = 6;
const char* to_string(KindClass k);
KindClass parse_kind_class(const std::string& s);
KindClass kind_class(OpKind k);
KindClass kind_class(CommKind k);

enum class SizeBucket { kSmall, kMedium, kLarge };
const char* to_string(SizeBucket b);
SizeBucket parse_size_bucket(const std::string& s);
/// Compute: < 1e9 FLOPs small, < 1e11 medium. Comm: < 1 MiB small, < 64 MiB medium.
SizeBucket size_bucket(bool is_comm, double theta);

struct EfficiencyKey {
  KindClass kind = KindClass::kMatmul;
  SizeBucket bucket = SizeBucket::kSmall;
  std::string gpu;
  std::optional<LinkScope> scope;  // unset for compute

  auto operator<=>(const EfficiencyKey&) const = default;
};

/// Everything a predictor may look at for one operator instance.
struct EfficiencyFeatures {
  EfficiencyKey key;
  bool is_comm = false;
  double theta = 0;  // FLOPs or payload bytes of one instance
  double phi = 0;    // peak FLOP/s or link bytes/s
  int64_t group_size = 1;

  /// Numeric vector consumed by tree ensembles:
  /// [is_comm, kind class, log2 theta, log2 phi, scope (-1 compute, 0 intra, 1 inter), group size].
  std::array<double, 6> vector() const;
};

EfficiencyFeatures features_of(const OpDesc& op, const GpuSpec& gpu);
EfficiencyFeatures features_of(const CommDesc& c, double link_bw, const GpuSpec& gpu);

/// Node of a binary regression tree. Leaves have `feature == -1`. Samples go
/// left when x[feature] < threshold.
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  double leaf = 0;
};

struct TreeEnsemble {
  double base_score = 0;
  std::vector<std::vector<TreeNode>> trees;

  /// base + sum of leaves, unclamped.
  double raw_predict(const std::array<double, 6>& x) const;
};

/// Accepts a JSON array of trees or {"base_score": b, "trees": [...]}; each
/// tree is an array of nodes {"feature","threshold","left","right"} or {"leaf"}.
TreeEnsemble parse_tree_ensemble(const nlohmann::json& j);

inline constexpr double kMinEfficiency = 1e-3;
inline constexpr double kDefaultEfficiency = 0.5;

/// Clamps into (0, 1]; non-finite and non-positive values map to kMinEfficiency.
double clamp_efficiency(double eta);

/// Immutable operator-efficiency predictor.
class EfficiencyModel {
 public:
  enum class Variant { kConstant, kLookup, kEnsemble };

  EfficiencyModel() : EfficiencyModel(constant(kDefaultEfficiency)) {}
  static EfficiencyModel constant(double eta);
  static EfficiencyModel lookup(std::map<EfficiencyKey, double> table,
                                double default_eta = kDefaultEfficiency);
  static EfficiencyModel ensemble(TreeEnsemble trees);

  Variant variant() const { return variant_; }
  double default_eta() const { return default_eta_; }
  const std::map<EfficiencyKey, double>& table() const { return table_; }

  double predict(const EfficiencyFeatures& f) const;

 private:
  explicit EfficiencyModel(Variant v) : variant_(v) {}

  Variant variant_ = Variant::kConstant;
  double default_eta_ = kDefaultEfficiency;
  std::map<EfficiencyKey, double> table_;
  TreeEnsemble trees_;
};

double predict_efficiency(const EfficiencyModel& model, const OpDesc& op, const GpuSpec& gpu);
double predict_efficiency(const EfficiencyModel& model, const CommDesc& c, double link_bw,
                          const GpuSpec& gpu);

/// One profiling record, already converted to (key, theta, phi).
struct ProfileSample {
  EfficiencyKey key;
  double theta = 0;
  double phi = 0;
  double measured_seconds = 0;
  int64_t row = 0;  // 1-based data row, for error messages
};

/// Reads the profiling CSV (header kind,m,n,k_or_bytes,gpu,scope,measured_seconds).
/// Compute rows price 2*m*n*k FLOPs against peak FLOP/s; comm rows take the
/// payload from k_or_bytes and the group size from m.
std::vector<ProfileSample> read_profile_csv(const std::filesystem::path& path,
                                            const GpuCatalog& catalog);
std::vector<ProfileSample> parse_profile_csv(const std::string& text, const GpuCatalog& catalog);

/// Per key, the clamped median of theta/(phi*measured).
EfficiencyModel calibrate_efficiency(const std::vector<ProfileSample>& samples,
                                     double default_eta = kDefaultEfficiency);

/// Lookup JSON: {"type":"lookup","default_eta":..,"entries":[{kind,bucket,gpu,scope,eta}]};
/// constant JSON: {"type":"constant","eta":..}; anything else is an ensemble.
EfficiencyModel parse_efficiency_model(const nlohmann::json& j);
/// `.csv` files are calibrated, other files parsed as JSON.
EfficiencyModel load_efficiency_model(const std::filesystem::path& path,
                                      const GpuCatalog& catalog);
nlohmann::json efficiency_model_to_json(const EfficiencyModel& m);

/// theta / (phi * eta) for one instance of `op`.
double op_compute_time(const OpDesc& op, const GpuSpec& gpu, const EfficiencyModel& eff);
/// effective bytes / (bw * eta) for one instance of `c`.
double op_comm_time(const CommDesc& c, double link_bw, const EfficiencyModel& eff,
                    const GpuSpec& gpu);

struct StageOps {
  std::vector<OpDesc> ops;
  std::vector<CommDesc> comms;
};

/// Operators of one stage for one microbatch (plus the once-per-iteration
/// data-parallel gradient sync). Throws UnsupportedStrategy for MoE.
StageOps build_stage_ops(const Strategy& s, const StageSlot& slot, const GpuSpec& gpu,
                         const TrainConfig& train);

/// Link bandwidths seen by one stage. p2p to a neighbour on a different GPU
/// type overrides the scope-based bandwidth.
struct Links {
  double intra_bw = 0;
  double inter_bw = 0;
  std::optional<double> p2p_next_bw;
  std::optional<double> p2p_prev_bw;

  static Links of(const GpuSpec& gpu) { return {gpu.intra_node_bw, gpu.inter_node_bw, {}, {}}; }
  double bandwidth(const CommDesc& c) const;
};

struct OverlapFlags {
  bool tp_comm = false;       // tp_comm_overlap, effective only with sequence parallel
  bool p2p = false;
  bool grad_reduce = false;
  bool param_gather = false;  // effective only with the distributed optimizer

  static OverlapFlags of(const ParallelParams& p);
};

struct StageCost {
  double compute_fwd = 0;
  double compute_bwd = 0;  // includes recompute
  double tp_comm_fwd = 0;  // after overlap
  double tp_comm_bwd = 0;
  double t_fwd = 0;        // compute + unhidden tp comm
  double t_bwd = 0;
  double h_fwd = 0;        // p2p after overlap
  double h_bwd = 0;
  double t_dp_comm = 0;    // unhidden, once per iteration
  double t_dp_comm_raw = 0;

  double per_microbatch() const { return t_fwd + t_bwd + h_fwd + h_bwd; }
  bool operator==(const StageCost&) const = default;
};

StageCost stage_time(const StageOps& ops, const GpuSpec& gpu, const Links& links,
                     const EfficiencyModel& eff, const OverlapFlags& overlap = {});

struct CostBreakdown {
  double t_comp = 0;
  double t_comm = 0;
  double t_bubble = 0;
  double t_total = 0;
  double throughput_tokens_per_s = 0;
  double throughput_samples_per_s = 0;
};

/// Fills throughputs from t_total.
void set_throughput(CostBreakdown& c, const TrainConfig& train);

/// Classic pipeline formula around one representative stage:
/// T_comp + T_comm = K * per-microbatch time + unhidden dp comm and
/// T_bubble = (pp - 1) * per-microbatch time / v for v virtual chunks.
CostBreakdown iteration_time_homogeneous(const Strategy& s, const StageCost& stage, int64_t K,
                                         const TrainConfig& train);

/// Per-stage costs with neighbour-aware p2p links.
std::vector<StageCost> stage_costs(const Strategy& s, const GpuCatalog& catalog,
                                   const EfficiencyModel& eff, const TrainConfig& train);

/// Iteration cost of any strategy. Homogeneous strategies use
/// iteration_time_homogeneous on the slowest stage; partitioned strategies sum
/// the pipeline formula over forward and backward stage times plus the
/// largest unhidden dp sync.
CostBreakdown simulate_strategy(const Strategy& s, const GpuCatalog& catalog,
                                const EfficiencyModel& eff, const TrainConfig& train);

nlohmann::json cost_to_json(const CostBreakdown& c);

}  // namespace parasearch

#endif  // PARASEARCH_COSTSIM_H_
