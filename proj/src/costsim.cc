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


#include "parasearch/costsim.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "parasearch/error.h"
#include "parasearch/hetero.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "costsim";
constexpr double kMiB = 1024.0 * 1024.0;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double scope_code(const std::optional<LinkScope>& s) {
  if (!s) return -1;
  return *s == LinkScope::kIntraNode ? 0 : 1;
}

std::optional<LinkScope> parse_scope(const std::string& s) {
  if (s.empty() || s == "-" || s == "none") return std::nullopt;
  if (s == "intra" || s == "intra_node") return LinkScope::kIntraNode;
  if (s == "inter" || s == "inter_node") return LinkScope::kInterNode;
  throw ParseError(kModule, "unknown scope '" + s + "'");
}

bool is_comm_class(KindClass k) {
  return k != KindClass::kMatmul && k != KindClass::kEmbed;
}

// Accepts a class name or any specific operator kind name.
KindClass parse_any_kind(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(OpKind::kLogits); ++k) {
    if (s == to_string(static_cast<OpKind>(k))) return kind_class(static_cast<OpKind>(k));
  }
  for (int k = 0; k <= static_cast<int>(CommKind::kDpReducescatterGather); ++k) {
    if (s == to_string(static_cast<CommKind>(k))) return kind_class(static_cast<CommKind>(k));
  }
  return parse_kind_class(s);
}

CommKind representative_comm(KindClass k) {
  switch (k) {
    case KindClass::kAllgather: return CommKind::kTpAllgather;
    case KindClass::kReducescatter: return CommKind::kTpReducescatter;
    case KindClass::kP2p: return CommKind::kP2pActivation;
    default: return CommKind::kTpAllreduce;
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double parse_number(const std::string& s, int64_t row, const char* column) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(kModule, "profile row " + std::to_string(row) + ": bad " + column + " '" +
                                  s + "'");
  }
}

bool is_tp(CommKind k) {
  return k == CommKind::kTpAllreduce || k == CommKind::kTpAllgather ||
         k == CommKind::kTpReducescatter;
}

bool is_dp(CommKind k) {
  return k == CommKind::kDpAllreduce || k == CommKind::kDpReducescatterGather;
}

}  // namespace

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::kMatmulQkv: return "matmul_qkv";
    case OpKind::kMatmulAttnScore: return "matmul_attn_score";
    case OpKind::kMatmulAttnCtx: return "matmul_attn_ctx";
    case OpKind::kMatmulProj: return "matmul_proj";
    case OpKind::kMatmulMlpUp: return "matmul_mlp_up";
    case OpKind::kMatmulMlpDown: return "matmul_mlp_down";
    case OpKind::kEmbed: return "embed";
    case OpKind::kLogits: return "logits";
  }
  return "?";
}

const char* to_string(CommKind k) {
  switch (k) {
    case CommKind::kTpAllreduce: return "tp_allreduce";
    case CommKind::kTpAllgather: return "tp_allgather";
    case CommKind::kTpReducescatter: return "tp_reducescatter";
    case CommKind::kP2pActivation: return "p2p_activation";
    case CommKind::kDpAllreduce: return "dp_allreduce";
    case CommKind::kDpReducescatterGather: return "dp_reducescatter_gather";
  }
  return "?";
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::kForward: return "fwd";
    case Phase::kBackward: return "bwd";
    case Phase::kRecompute: return "recompute";
  }
  return "?";
}

const char* to_string(LinkScope s) {
  return s == LinkScope::kIntraNode ? "intra_node" : "inter_node";
}

double collective_factor(CommKind kind, int64_t g) {
  const double gd = static_cast<double>(g);
  switch (kind) {
    case CommKind::kTpAllreduce:
    case CommKind::kDpAllreduce:
    case CommKind::kDpReducescatterGather:
      return 2.0 * (gd - 1.0) / gd;
    case CommKind::kTpAllgather:
    case CommKind::kTpReducescatter:
      return (gd - 1.0) / gd;
    case CommKind::kP2pActivation:
      return 1.0;
  }
  return 1.0;
}

const char* to_string(KindClass k) {
  switch (k) {
    case KindClass::kMatmul: return "matmul";
    case KindClass::kEmbed: return "embed";
    case KindClass::kAllreduce: return "allreduce";
    case KindClass::kAllgather: return "allgather";
    case KindClass::kReducescatter: return "reducescatter";
    case KindClass::kP2p: return "p2p";
  }
  return "?";
}

KindClass parse_kind_class(const std::string& s) {
  for (size_t k = 0; k < kNumKindClasses; ++k) {
    if (s == to_string(static_cast<KindClass>(k))) return static_cast<KindClass>(k);
  }
  throw ParseError(kModule, "unknown operator kind '" + s + "'");
}

KindClass kind_class(OpKind k) {
  return k == OpKind::kEmbed ? KindClass::kEmbed : KindClass::kMatmul;
}

KindClass kind_class(CommKind k) {
  switch (k) {
    case CommKind::kTpAllgather: return KindClass::kAllgather;
    case CommKind::kTpReducescatter: return KindClass::kReducescatter;
    case CommKind::kP2pActivation: return KindClass::kP2p;
    default: return KindClass::kAllreduce;
  }
}

const char* to_string(SizeBucket b) {
  switch (b) {
    case SizeBucket::kSmall: return "small";
    case SizeBucket::kMedium: return "medium";
    case SizeBucket::kLarge: return "large";
  }
  return "?";
}

SizeBucket parse_size_bucket(const std::string& s) {
  if (s == "small") return SizeBucket::kSmall;
  if (s == "medium") return SizeBucket::kMedium;
  if (s == "large") return SizeBucket::kLarge;
  throw ParseError(kModule, "unknown size bucket '" + s + "'");
}

SizeBucket size_bucket(bool is_comm, double theta) {
  const double small = is_comm ? kMiB : 1e9;
  const double medium = is_comm ? 64 * kMiB : 1e11;
  if (theta < small) return SizeBucket::kSmall;
  if (theta < medium) return SizeBucket::kMedium;
  return SizeBucket::kLarge;
}

std::array<double, 6> EfficiencyFeatures::vector() const {
  return {is_comm ? 1.0 : 0.0,
          static_cast<double>(key.kind),
          std::log2(std::max(theta, 1.0)),
          std::log2(std::max(phi, 1.0)),
          scope_code(key.scope),
          static_cast<double>(group_size)};
}

EfficiencyFeatures features_of(const OpDesc& op, const GpuSpec& gpu) {
  EfficiencyFeatures f;
  f.key = {kind_class(op.kind), size_bucket(false, op.theta_flops), gpu.name, std::nullopt};
  f.theta = op.theta_flops;
  f.phi = gpu.peak_flops;
  return f;
}

EfficiencyFeatures features_of(const CommDesc& c, double link_bw, const GpuSpec& gpu) {
  EfficiencyFeatures f;
  f.key = {kind_class(c.kind), size_bucket(true, c.theta_bytes), gpu.name, c.scope};
  f.is_comm = true;
  f.theta = c.theta_bytes;
  f.phi = link_bw;
  f.group_size = c.group_size;
  return f;
}

double TreeEnsemble::raw_predict(const std::array<double, 6>& x) const {
  double sum = base_score;
  for (const auto& tree : trees) {
    size_t i = 0;
    while (tree[i].feature >= 0) {
      const TreeNode& n = tree[i];
      i = static_cast<size_t>(x[static_cast<size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    sum += tree[i].leaf;
  }
  return sum;
}

TreeEnsemble parse_tree_ensemble(const nlohmann::json& j) {
  TreeEnsemble e;
  const nlohmann::json* trees = &j;
  if (j.is_object()) {
    if (!j.contains("trees")) throw ParseError(kModule, "ensemble: missing 'trees'");
    e.base_score = j.value("base_score", 0.0);
    trees = &j.at("trees");
  }
  if (!trees->is_array()) throw ParseError(kModule, "ensemble: 'trees' must be an array");
  try {
    for (size_t t = 0; t < trees->size(); ++t) {
      const auto& jt = (*trees)[t];
      const std::string where = "ensemble tree " + std::to_string(t);
      if (!jt.is_array() || jt.empty()) throw ParseError(kModule, where + ": empty or not an array");
      std::vector<TreeNode> nodes;
      const int n = static_cast<int>(jt.size());
      for (int i = 0; i < n; ++i) {
        const auto& jn = jt[static_cast<size_t>(i)];
        TreeNode node;
        if (jn.contains("leaf")) {
          node.leaf = jn.at("leaf").get<double>();
        } else {
          node.feature = jn.at("feature").get<int>();
          node.threshold = jn.at("threshold").get<double>();
          node.left = jn.at("left").get<int>();
          node.right = jn.at("right").get<int>();
          if (node.feature < 0 || node.feature >= 6) {
            throw ParseError(kModule, where + ": feature index out of range");
          }
          // Children after their parent rule out cycles.
          if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
            throw ParseError(kModule, where + ": bad child index at node " + std::to_string(i));
          }
        }
        nodes.push_back(node);
      }
      e.trees.push_back(std::move(nodes));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(kModule, std::string("ensemble: ") + ex.what());
  }
  return e;
}

double clamp_efficiency(double eta) {
  if (!(eta > kMinEfficiency)) return kMinEfficiency;
  return std::min(eta, 1.0);
}

EfficiencyModel EfficiencyModel::constant(double eta) {
  EfficiencyModel m(Variant::kConstant);
  m.default_eta_ = clamp_efficiency(eta);
  return m;
}

EfficiencyModel EfficiencyModel::lookup(std::map<EfficiencyKey, double> table, double default_eta) {
  EfficiencyModel m(Variant::kLookup);
  m.default_eta_ = clamp_efficiency(default_eta);
  for (auto& [k, v] : table) v = clamp_efficiency(v);
  m.table_ = std::move(table);
  return m;
}

EfficiencyModel EfficiencyModel::ensemble(TreeEnsemble trees) {
  EfficiencyModel m(Variant::kEnsemble);
  m.trees_ = std::move(trees);
  return m;
}

double EfficiencyModel::predict(const EfficiencyFeatures& f) const {
  switch (variant_) {
    case Variant::kConstant:
      return default_eta_;
    case Variant::kLookup: {
      const auto it = table_.find(f.key);
      return it == table_.end() ? default_eta_ : it->second;
    }
    case Variant::kEnsemble:
      return clamp_efficiency(trees_.raw_predict(f.vector()));
  }
  return default_eta_;
}

double predict_efficiency(const EfficiencyModel& model, const OpDesc& op, const GpuSpec& gpu) {
  return model.predict(features_of(op, gpu));
}

double predict_efficiency(const EfficiencyModel& model, const CommDesc& c, double link_bw,
                          const GpuSpec& gpu) {
  return model.predict(features_of(c, link_bw, gpu));
}

std::vector<ProfileSample> parse_profile_csv(const std::string& text, const GpuCatalog& catalog) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(kModule, "profile: empty file");
  auto header = split_csv_line(trim(line));
  const std::vector<std::string> want = {"kind", "m", "n", "k_or_bytes", "gpu", "scope",
                                         "measured_seconds"};
  if (header != want) {
    throw ParseError(kModule, "profile: header must be kind,m,n,k_or_bytes,gpu,scope,measured_seconds");
  }
  std::vector<ProfileSample> out;
  int64_t row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    ++row;
    const auto cells = split_csv_line(line);
    const std::string where = "profile row " + std::to_string(row);
    if (cells.size() != 7) throw ParseError(kModule, where + ": expected 7 columns");
    KindClass kind;
    try {
      kind = parse_any_kind(cells[0]);
    } catch (const ParseError&) {
      throw ParseError(kModule, where + ": unknown kind '" + cells[0] + "'");
    }
    const double m = parse_number(cells[1], row, "m");
    const double n = parse_number(cells[2], row, "n");
    const double k = parse_number(cells[3], row, "k_or_bytes");
    const GpuSpec* gpu = catalog.find(cells[4]);
    if (!gpu) throw ParseError(kModule, where + ": unknown gpu '" + cells[4] + "'");
    std::optional<LinkScope> scope;
    try {
      scope = parse_scope(cells[5]);
    } catch (const ParseError&) {
      throw ParseError(kModule, where + ": unknown scope '" + cells[5] + "'");
    }
    const double measured = parse_number(cells[6], row, "measured_seconds");
    if (!(measured > 0)) {
      throw ParseError(kModule, where + ": measured_seconds must be > 0");
    }
    ProfileSample s;
    s.row = row;
    s.measured_seconds = measured;
    if (is_comm_class(kind)) {
      if (!scope) throw ParseError(kModule, where + ": communication rows need a scope");
      if (k <= 0 || m < 1) throw ParseError(kModule, where + ": bad payload or group size");
      const auto g = static_cast<int64_t>(m);
      s.key = {kind, size_bucket(true, k), gpu->name, scope};
      s.theta = k * collective_factor(representative_comm(kind), g);
      s.phi = *scope == LinkScope::kIntraNode ? gpu->intra_node_bw : gpu->inter_node_bw;
      if (!(s.theta > 0)) throw ParseError(kModule, where + ": group size must be at least 2");
    } else {
      if (m <= 0 || n <= 0 || k <= 0) throw ParseError(kModule, where + ": dimensions must be > 0");
      s.theta = 2.0 * m * n * k;
      s.key = {kind, size_bucket(false, s.theta), gpu->name, std::nullopt};
      s.phi = gpu->peak_flops;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ProfileSample> read_profile_csv(const std::filesystem::path& path,
                                            const GpuCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ParseError(kModule, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_profile_csv(buf.str(), catalog);
}

EfficiencyModel calibrate_efficiency(const std::vector<ProfileSample>& samples,
                                     double default_eta) {
  std::map<EfficiencyKey, std::vector<double>> ratios;
  for (const auto& s : samples) {
    if (!(s.measured_seconds > 0)) {
      throw ValidationError(kModule, "measured_seconds",
                            "row " + std::to_string(s.row) + " must be > 0");
    }
    ratios[s.key].push_back(s.theta / (s.phi * s.measured_seconds));
  }
  std::map<EfficiencyKey, double> table;
  for (auto& [key, r] : ratios) table[key] = clamp_efficiency(median(std::move(r)));
  return EfficiencyModel::lookup(std::move(table), default_eta);
}

EfficiencyModel parse_efficiency_model(const nlohmann::json& j) {
  if (j.is_object() && j.contains("type") && !j.contains("trees")) {
    const std::string type = j.at("type").get<std::string>();
    try {
      if (type == "constant") return EfficiencyModel::constant(j.at("eta").get<double>());
      if (type == "lookup") {
        std::map<EfficiencyKey, double> table;
        for (const auto& e : j.at("entries")) {
          EfficiencyKey key;
          key.kind = parse_kind_class(e.at("kind").get<std::string>());
          key.bucket = parse_size_bucket(e.at("bucket").get<std::string>());
          key.gpu = e.at("gpu").get<std::string>();
          key.scope = parse_scope(e.value("scope", std::string("-")));
          table[key] = e.at("eta").get<double>();
        }
        return EfficiencyModel::lookup(std::move(table), j.value("default_eta", kDefaultEfficiency));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(kModule, std::string("efficiency model: ") + ex.what());
    }
    if (type != "ensemble") throw ParseError(kModule, "unknown efficiency model type '" + type + "'");
  }
  return EfficiencyModel::ensemble(parse_tree_ensemble(j));
}

EfficiencyModel load_efficiency_model(const std::filesystem::path& path,
                                      const GpuCatalog& catalog) {
  if (path.extension() == ".csv") return calibrate_efficiency(read_profile_csv(path, catalog));
  return parse_efficiency_model(read_json_file(path, kModule));
}

nlohmann::json efficiency_model_to_json(const EfficiencyModel& m) {
  nlohmann::json j;
  switch (m.variant()) {
    case EfficiencyModel::Variant::kConstant:
      j["type"] = "constant";
      j["eta"] = m.default_eta();
      break;
    case EfficiencyModel::Variant::kLookup: {
      j["type"] = "lookup";
      j["default_eta"] = m.default_eta();
      j["entries"] = nlohmann::json::array();
      for (const auto& [k, v] : m.table()) {
        j["entries"].push_back({{"kind", to_string(k.kind)},
                                {"bucket", to_string(k.bucket)},
                                {"gpu", k.gpu},
                                {"scope", k.scope ? to_string(*k.scope) : "-"},
                                {"eta", v}});
      }
      break;
    }
    case EfficiencyModel::Variant::kEnsemble:
      j["type"] = "ensemble";
      break;
  }
  return j;
}

double op_compute_time(const OpDesc& op, const GpuSpec& gpu, const EfficiencyModel& eff) {
  return op.theta_flops / (gpu.peak_flops * predict_efficiency(eff, op, gpu));
}

double op_comm_time(const CommDesc& c, double link_bw, const EfficiencyModel& eff,
                    const GpuSpec& gpu) {
  const double bytes = c.theta_bytes * collective_factor(c.kind, c.group_size);
  return bytes / (link_bw * predict_efficiency(eff, c, link_bw, gpu));
}

StageOps build_stage_ops(const Strategy& s, const StageSlot& slot, const GpuSpec& gpu,
                         const TrainConfig& train) {
  if (s.params.moe) {
    throw UnsupportedStrategy(kModule, "MoE strategies are not modeled [strategy " + s.id + "]");
  }
  const ParallelParams& p = s.params;
  const ModelArch& arch = s.arch;
  const double sd = static_cast<double>(train.seq_len);
  const double b = static_cast<double>(p.micro_batch);
  const double h = static_cast<double>(arch.hidden_size);
  const double ffn = static_cast<double>(arch.intermediate_size);
  const double vocab = static_cast<double>(arch.vocab_size);
  const double t = static_cast<double>(p.tp);
  const double bytes = static_cast<double>(train.bytes_per_element);
  const int64_t layers = slot.layers;

  struct LayerOp {
    OpKind kind;
    double flops;
  };
  const std::array<LayerOp, 6> layer_ops = {{
      {OpKind::kMatmulQkv, 6.0 * sd * b * h * h / t},
      {OpKind::kMatmulAttnScore, 2.0 * b * sd * sd * h / t},
      {OpKind::kMatmulAttnCtx, 2.0 * b * sd * sd * h / t},
      {OpKind::kMatmulProj, 2.0 * sd * b * h * h / t},
      {OpKind::kMatmulMlpUp, 2.0 * sd * b * h * ffn * (arch.gated_mlp ? 2.0 : 1.0) / t},
      {OpKind::kMatmulMlpDown, 2.0 * sd * b * h * ffn / t},
  }};

  StageOps out;
  auto add_layer_ops = [&](Phase phase, double scale, int64_t count, bool attention_only) {
    if (count <= 0) return;
    for (const auto& op : layer_ops) {
      const bool attention =
          op.kind == OpKind::kMatmulAttnScore || op.kind == OpKind::kMatmulAttnCtx;
      if (attention_only && !attention) continue;
      out.ops.push_back({op.kind, op.flops * scale, phase, count});
    }
  };

  // Full-recompute layers on this stage.
  int64_t full_layers = 0;
  int64_t selective_layers = 0;
  switch (p.recompute_granularity) {
    case RecomputeGranularity::kNone:
      break;
    case RecomputeGranularity::kSelective:
      selective_layers = layers;
      break;
    case RecomputeGranularity::kFull:
      full_layers = p.recompute_method == RecomputeMethod::kBlock
                        ? std::min(p.recompute_num_layers, layers)
                        : layers;
      break;
    case RecomputeGranularity::kHybrid:
      full_layers = std::min(p.recompute_num_layers, layers);
      selective_layers = layers - full_layers;
      break;
  }

  if (slot.first) out.ops.push_back({OpKind::kEmbed, sd * b * h, Phase::kForward, 1});
  add_layer_ops(Phase::kForward, 1.0, layers, false);
  if (slot.last) out.ops.push_back({OpKind::kLogits, 2.0 * sd * b * h * vocab / t, Phase::kForward, 1});

  add_layer_ops(Phase::kRecompute, 1.0, full_layers, false);
  add_layer_ops(Phase::kRecompute, 1.0, selective_layers, true);

  if (slot.first) out.ops.push_back({OpKind::kEmbed, 2.0 * sd * b * h, Phase::kBackward, 1});
  add_layer_ops(Phase::kBackward, 2.0, layers, false);
  if (slot.last) {
    out.ops.push_back({OpKind::kLogits, 4.0 * sd * b * h * vocab / t, Phase::kBackward, 1});
  }

  const int64_t gpn = gpu.gpus_per_node;
  const double act = sd * b * h * bytes;
  if (p.tp > 1) {
    const LinkScope scope = p.tp <= gpn ? LinkScope::kIntraNode : LinkScope::kInterNode;
    auto add_tp = [&](Phase phase, int64_t layer_count) {
      if (layer_count <= 0) return;
      if (p.sequence_parallel) {
        out.comms.push_back({CommKind::kTpAllgather, act, scope, p.tp, phase, 2 * layer_count});
        out.comms.push_back({CommKind::kTpReducescatter, act, scope, p.tp, phase, 2 * layer_count});
      } else {
        out.comms.push_back({CommKind::kTpAllreduce, act, scope, p.tp, phase, 2 * layer_count});
      }
    };
    add_tp(Phase::kForward, layers);
    add_tp(Phase::kRecompute, full_layers);
    add_tp(Phase::kBackward, layers);
  }

  const int64_t pp = p.pp;
  if (pp > 1) {
    const LinkScope scope =
        s.gpu_config.total <= gpn ? LinkScope::kIntraNode : LinkScope::kInterNode;
    const double payload = act / (p.sequence_parallel ? t : 1.0);
    int64_t chunks = 1;
    if (p.vpp_layers && *p.vpp_layers > 0 && layers > 0) chunks = layers / *p.vpp_layers;
    const int64_t sends_fwd = slot.last ? chunks - 1 : chunks;
    const int64_t sends_bwd = slot.first ? chunks - 1 : chunks;
    if (sends_fwd > 0) {
      out.comms.push_back({CommKind::kP2pActivation, payload, scope, 2, Phase::kForward, sends_fwd});
    }
    if (sends_bwd > 0) {
      out.comms.push_back({CommKind::kP2pActivation, payload, scope, 2, Phase::kBackward, sends_bwd});
    }
  }

  const int64_t dp = p.dp;
  if (dp > 1) {
    const double grads = stage_param_count(arch, slot, pp) / t * bytes;
    const LinkScope scope = p.tp * dp <= gpn ? LinkScope::kIntraNode : LinkScope::kInterNode;
    const CommKind kind =
        p.distributed_optimizer ? CommKind::kDpReducescatterGather : CommKind::kDpAllreduce;
    out.comms.push_back({kind, grads, scope, dp, Phase::kBackward, 1});
  }
  return out;
}

double Links::bandwidth(const CommDesc& c) const {
  if (c.kind == CommKind::kP2pActivation) {
    if (c.phase == Phase::kForward && p2p_next_bw) return *p2p_next_bw;
    if (c.phase != Phase::kForward && p2p_prev_bw) return *p2p_prev_bw;
  }
  return c.scope == LinkScope::kIntraNode ? intra_bw : inter_bw;
}

OverlapFlags OverlapFlags::of(const ParallelParams& p) {
  OverlapFlags f;
  f.tp_comm = p.tp_comm_overlap && p.sequence_parallel;
  f.p2p = p.overlap_p2p;
  f.grad_reduce = p.overlap_grad_reduce;
  f.param_gather = p.overlap_param_gather && p.distributed_optimizer;
  return f;
}

StageCost stage_time(const StageOps& ops, const GpuSpec& gpu, const Links& links,
                     const EfficiencyModel& eff, const OverlapFlags& overlap) {
  StageCost c;
  for (const auto& op : ops.ops) {
    const double time = op_compute_time(op, gpu, eff) * static_cast<double>(op.count);
    (op.phase == Phase::kForward ? c.compute_fwd : c.compute_bwd) += time;
  }
  double tp_fwd = 0, tp_bwd = 0, p2p_fwd = 0, p2p_bwd = 0;
  bool sharded_dp = false;
  for (const auto& cm : ops.comms) {
    const double time =
        op_comm_time(cm, links.bandwidth(cm), eff, gpu) * static_cast<double>(cm.count);
    const bool fwd = cm.phase == Phase::kForward;
    if (is_tp(cm.kind)) {
      (fwd ? tp_fwd : tp_bwd) += time;
    } else if (is_dp(cm.kind)) {
      c.t_dp_comm_raw += time;
      sharded_dp = sharded_dp || cm.kind == CommKind::kDpReducescatterGather;
    } else {
      (fwd ? p2p_fwd : p2p_bwd) += time;
    }
  }
  auto hide = [](double comm, double budget) { return std::max(0.0, comm - budget); };
  c.tp_comm_fwd = overlap.tp_comm ? hide(tp_fwd, c.compute_fwd) : tp_fwd;
  c.tp_comm_bwd = overlap.tp_comm ? hide(tp_bwd, c.compute_bwd) : tp_bwd;
  c.t_fwd = c.compute_fwd + c.tp_comm_fwd;
  c.t_bwd = c.compute_bwd + c.tp_comm_bwd;
  c.h_fwd = overlap.p2p ? hide(p2p_fwd, c.compute_fwd) : p2p_fwd;
  c.h_bwd = overlap.p2p ? hide(p2p_bwd, c.compute_bwd) : p2p_bwd;
  if (sharded_dp) {
    // Reduce-scatter of grads overlaps backward; all-gather of params overlaps forward.
    const double half = 0.5 * c.t_dp_comm_raw;
    const double rs = overlap.grad_reduce ? hide(half, c.t_bwd) : half;
    const double ag = overlap.param_gather ? hide(half, c.t_fwd) : half;
    c.t_dp_comm = rs + ag;
  } else {
    c.t_dp_comm = overlap.grad_reduce ? hide(c.t_dp_comm_raw, c.t_bwd) : c.t_dp_comm_raw;
  }
  return c;
}

void set_throughput(CostBreakdown& c, const TrainConfig& train) {
  const double samples = static_cast<double>(train.global_batch);
  c.throughput_samples_per_s = samples / c.t_total;
  c.throughput_tokens_per_s = samples * static_cast<double>(train.seq_len) / c.t_total;
}

CostBreakdown iteration_time_homogeneous(const Strategy& s, const StageCost& stage, int64_t K,
                                         const TrainConfig& train) {
  if (s.partition || s.gpu_config.heterogeneous()) {
    throw ValidationError(kModule, "strategy",
                          "heterogeneous strategy " + s.id + " must be priced by hetero");
  }
  if (K < 1) throw ValidationError(kModule, "K", "microbatch count must be >= 1");
  const double per_mb = stage.per_microbatch();
  const double compute = stage.compute_fwd + stage.compute_bwd;
  double chunks = 1;
  if (s.params.vpp_layers && *s.params.vpp_layers > 0) {
    chunks = static_cast<double>(s.arch.num_layers / s.params.pp / *s.params.vpp_layers);
  }
  CostBreakdown c;
  c.t_comp = static_cast<double>(K) * compute;
  c.t_comm = static_cast<double>(K) * (per_mb - compute) + stage.t_dp_comm;
  c.t_bubble = static_cast<double>(s.params.pp - 1) * per_mb / chunks;
  c.t_total = c.t_comp + c.t_comm + c.t_bubble;
  set_throughput(c, train);
  return c;
}

std::vector<StageCost> stage_costs(const Strategy& s, const GpuCatalog& catalog,
                                   const EfficiencyModel& eff, const TrainConfig& train) {
  const auto slots = stage_slots(s);
  const OverlapFlags overlap = OverlapFlags::of(s.params);
  std::vector<StageCost> out;
  out.reserve(slots.size());
  const GpuSpec* gpu = nullptr;
  Links prev_links;
  for (size_t i = 0; i < slots.size(); ++i) {
    const StageSlot& slot = slots[i];
    if (!gpu || gpu->name != slot.gpu_type) gpu = &catalog.at(slot.gpu_type);
    Links links = Links::of(*gpu);
    if (i + 1 < slots.size() && slots[i + 1].gpu_type != slot.gpu_type) {
      links.p2p_next_bw =
          std::min(gpu->inter_node_bw, catalog.at(slots[i + 1].gpu_type).inter_node_bw);
    }
    if (i > 0 && slots[i - 1].gpu_type != slot.gpu_type) {
      links.p2p_prev_bw =
          std::min(gpu->inter_node_bw, catalog.at(slots[i - 1].gpu_type).inter_node_bw);
    }
    // Interior stages of a run repeat; reuse the previous result.
    const bool same = i > 0 && !slot.first && !slot.last && !slots[i - 1].first &&
                      slots[i - 1].gpu_type == slot.gpu_type &&
                      slots[i - 1].layers == slot.layers && !links.p2p_next_bw &&
                      !links.p2p_prev_bw && !prev_links.p2p_next_bw && !prev_links.p2p_prev_bw;
    if (same) {
      out.push_back(out.back());
    } else {
      out.push_back(stage_time(build_stage_ops(s, slot, *gpu, train), *gpu, links, eff, overlap));
    }
    prev_links = links;
  }
  return out;
}

CostBreakdown simulate_strategy(const Strategy& s, const GpuCatalog& catalog,
                                const EfficiencyModel& eff, const TrainConfig& train) {
  const auto costs = stage_costs(s, catalog, eff, train);
  const int64_t K = s.num_microbatches(train);
  double dp = 0;
  size_t bottleneck = 0;
  for (size_t i = 0; i < costs.size(); ++i) {
    dp = std::max(dp, costs[i].t_dp_comm);
    if (costs[i].per_microbatch() > costs[bottleneck].per_microbatch()) bottleneck = i;
  }
  if (!s.partition) {
    StageCost rep = costs[bottleneck];
    rep.t_dp_comm = dp;
    return iteration_time_homogeneous(s, rep, K, train);
  }
  StageTimes fwd, bwd;
  for (const auto& c : costs) {
    fwd.push_back({c.t_fwd, c.h_fwd});
    bwd.push_back({c.t_bwd, c.h_bwd});
  }
  const double pipeline = hetero_pipeline_time(fwd, K) + hetero_pipeline_time(bwd, K);
  const StageCost& b = costs[bottleneck];
  const double compute = b.compute_fwd + b.compute_bwd;
  CostBreakdown c;
  c.t_comp = static_cast<double>(K) * compute;
  c.t_comm = static_cast<double>(K) * (b.per_microbatch() - compute) + dp;
  c.t_bubble = std::max(0.0, pipeline + dp - c.t_comp - c.t_comm);
  c.t_total = c.t_comp + c.t_comm + c.t_bubble;
  set_throughput(c, train);
  return c;
}

nlohmann::json cost_to_json(const CostBreakdown& c) {
  return {{"T_comp", c.t_comp},
          {"T_comm", c.t_comm},
          {"T_bubble", c.t_bubble},
          {"T_total", c.t_total},
          {"throughput_tokens_per_s", c.throughput_tokens_per_s},
          {"throughput_samples_per_s", c.throughput_samples_per_s}};
}

}  // namespace parasearch
