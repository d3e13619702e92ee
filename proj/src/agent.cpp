#include "veram/agent.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "veram/errors.hpp"
#include "veram/rng.hpp"

namespace veram {

AgentParams AgentParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.feature_dim <= 0 || cfg.classes < 2 || cfg.hidden_dim <= 0 || cfg.loc_embed_dim <= 0 || cfg.steps < 1)
    throw UsageError("AgentParams::init: invalid model config");

  Rng rng(Rng::mix(seed, 0x1217));
  AgentParams p;
  p.cfg = cfg;
  auto push = [&p](Tensor t) {
    p.tensors.push_back(std::move(t));
    return static_cast<int>(p.tensors.size()) - 1;
  };
  auto uniform = [&rng](std::vector<int> shape) { return Tensor::uniform_init(std::move(shape), rng); };

  const int h = cfg.hidden_dim;
  const int le = cfg.loc_embed_dim;
  const int fin = cfg.fused_input_dim();

  p.layout.w_le = push(uniform({le, 2}));
  p.layout.b_le = push(Tensor::zeros({le}));
  if (cfg.adapter_dim > 0) {
    p.layout.w_v = push(uniform({cfg.adapter_dim, cfg.feature_dim}));
    p.layout.b_v = push(Tensor::zeros({cfg.adapter_dim}));
  }
  p.layout.w_lv = push(uniform({h, fin}));
  p.layout.b_lv = push(Tensor::zeros({h}));
  if (cfg.recurrent == Recurrent::kLinear) {
    p.layout.w_h = push(uniform({h, h}));
  } else {
    p.layout.w_x = push(uniform({4 * h, h}));
    p.layout.w_hh = push(uniform({4 * h, h}));
    p.layout.b_g = push(Tensor::zeros({4 * h}));
  }
  p.layout.w_l = push(uniform({2, h}));
  // Center start: with h_0 = 0 the first estimate is ELU(b_l) = (0.5, 0.5).
  p.layout.b_l = push(Tensor::full({2}, 0.5));
  p.layout.w_c = push(uniform({cfg.classes, h}));
  p.layout.b_c = push(Tensor::zeros({cfg.classes}));

  p.baselines.assign(static_cast<std::size_t>(cfg.steps), 0.0);
  return p;
}

std::uint64_t AgentParams::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  auto feed = [&h](const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(p[i]);
      unsigned char b[8];
      std::memcpy(b, &bits, 8);
      h = fnv1a64(b, 8, h);
    }
  };
  for (const Tensor& t : tensors) feed(t.data.data(), t.data.size());
  feed(baselines.data(), baselines.size());
  return h;
}

namespace {

/// o_t = ReLU(W_lv [ReLU(W_le l + b_le) ; v] + b_lv), with the optional
/// adapter applied to v first.
NodeId observe_node(Tape& tape, const AgentParams& p, Location l, NodeId v_const) {
  const ParamLayout& L = p.layout;
  NodeId l_node = tape.constant(Tensor::vec({l.r, l.c}));
  NodeId le = tape.relu(tape.affine(l_node, tape.param(L.w_le), tape.param(L.b_le)));
  NodeId v_in = v_const;
  if (L.w_v >= 0) v_in = tape.relu(tape.affine(v_const, tape.param(L.w_v), tape.param(L.b_v)));
  return tape.relu(tape.affine(tape.concat(le, v_in), tape.param(L.w_lv), tape.param(L.b_lv)));
}

NodeId recur_linear_node(Tape& tape, const AgentParams& p, NodeId o, NodeId h_prev) {
  return tape.relu(tape.add(tape.matvec(tape.param(p.layout.w_h), h_prev), o));
}

struct LstmState {
  NodeId h;
  NodeId cell;
};

LstmState recur_lstm_node(Tape& tape, const AgentParams& p, NodeId o, LstmState prev) {
  const ParamLayout& L = p.layout;
  const int h = p.cfg.hidden_dim;
  NodeId gates = tape.add(tape.affine(o, tape.param(L.w_x), tape.param(L.b_g)),
                          tape.matvec(tape.param(L.w_hh), prev.h));
  NodeId gi = tape.sigmoid(tape.slice(gates, 0, h));
  NodeId gf = tape.sigmoid(tape.slice(gates, h, h));
  NodeId gg = tape.tanh(tape.slice(gates, 2 * h, h));
  NodeId go = tape.sigmoid(tape.slice(gates, 3 * h, h));
  NodeId cell = tape.add(tape.mul(gf, prev.cell), tape.mul(gi, gg));
  NodeId hid = tape.mul(go, tape.tanh(cell));
  return {hid, cell};
}

NodeId estimate_view_node(Tape& tape, const AgentParams& p, NodeId h_prev) {
  return tape.elu(tape.affine(h_prev, tape.param(p.layout.w_l), tape.param(p.layout.b_l)), p.cfg.elu_alpha);
}

}  // namespace

Rollout rollout(const Dataset& ds, const FeatureGrid& shape, const AgentParams& params, RolloutMode mode,
                const RolloutOptions& opts) {
  const ModelConfig& cfg = params.cfg;
  if (ds.feature_dim != cfg.feature_dim)
    throw DimensionError("rollout: dataset feature dim " + std::to_string(ds.feature_dim) +
                         " does not match model feature dim " + std::to_string(cfg.feature_dim));
  if (mode == RolloutMode::kTrain && opts.rng == nullptr)
    throw UsageError("rollout: train mode needs a random source");
  if (mode == RolloutMode::kReplay &&
      (opts.fixed_viewpoints == nullptr || static_cast<int>(opts.fixed_viewpoints->size()) != cfg.steps))
    throw UsageError("rollout: replay mode needs one fixed viewpoint per step");
  const GridShape grid = cfg.grid();

  Rollout out;
  out.tape = std::make_unique<Tape>(params.tensors);
  Tape& tape = *out.tape;
  out.trace.label = shape.label;

  NodeId h = tape.constant(Tensor::zeros({cfg.hidden_dim}));
  LstmState lstm{h, -1};
  if (cfg.recurrent == Recurrent::kLstm) lstm.cell = tape.constant(Tensor::zeros({cfg.hidden_dim}));

  for (int t = 0; t < cfg.steps; ++t) {
    NodeId u = estimate_view_node(tape, params, h);
    out.u_nodes.push_back(u);

    StepRecord rec;
    rec.estimate = {tape.value(u)[0], tape.value(u)[1]};
    switch (mode) {
      case RolloutMode::kTrain:
        rec.viewpoint = sample_location(rec.estimate, opts.delta, *opts.rng, grid);
        break;
      case RolloutMode::kTest:
        rec.viewpoint = clamp_location(rec.estimate.r, rec.estimate.c, grid);
        break;
      case RolloutMode::kReplay:
        rec.viewpoint = (*opts.fixed_viewpoints)[static_cast<std::size_t>(t)];
        break;
    }
    rec.cell = to_grid(rec.viewpoint, grid);
    rec.confidence = ds.confidence_at(shape, rec.cell);

    const float* raw = ds.features_at(shape, rec.cell);
    Tensor v = Tensor::zeros({cfg.feature_dim});
    for (int d = 0; d < cfg.feature_dim; ++d) v[d] = static_cast<double>(raw[d]);
    NodeId o = observe_node(tape, params, rec.viewpoint, tape.constant(std::move(v)));

    if (cfg.recurrent == Recurrent::kLinear) {
      h = recur_linear_node(tape, params, o, h);
    } else {
      lstm = recur_lstm_node(tape, params, o, lstm);
      h = lstm.h;
    }

    rec.observation = tape.value(o).data;
    rec.hidden = tape.value(h).data;
    out.trace.steps.push_back(std::move(rec));
  }

  out.log_probs_node =
      tape.log_softmax(tape.affine(h, tape.param(params.layout.w_c), tape.param(params.layout.b_c)));
  out.trace.log_probs = tape.value(out.log_probs_node).data;

  int best = 0;
  for (int k = 1; k < cfg.classes; ++k)
    if (out.trace.log_probs[static_cast<std::size_t>(k)] > out.trace.log_probs[static_cast<std::size_t>(best)])
      best = k;
  out.trace.predicted = best;
  out.trace.reward = best == shape.label ? 1.0 : 0.0;
  return out;
}

namespace {

constexpr char kParamsMagic[4] = {'V', 'A', 'P', '1'};

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void put_tensor(std::string& out, const Tensor& t) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : t.data) put_f64(out, v);
}

class ParamsReader {
 public:
  ParamsReader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  template <typename T>
  T get_le() {
    if (pos_ + sizeof(T) > bytes_.size()) throw DataError(path_ + ": truncated params file");
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  Tensor get_tensor() {
    std::uint32_t rank = get_le<std::uint32_t>();
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(get_le<std::uint32_t>()));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = get_f64();
    return t;
  }

  void expect_magic() {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), kParamsMagic, 4) != 0)
      throw DataError(path_ + ": not a VAP1 params file");
    pos_ = 4;
  }

 private:
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_params(const std::string& path, const AgentParams& params, const TrainerState* state) {
  std::string out;
  out.append(kParamsMagic, 4);
  put_le<std::uint32_t>(out, 1);  // version
  const ModelConfig& c = params.cfg;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.feature_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.classes));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.grid_rows));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.grid_cols));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.loc_embed_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.hidden_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.adapter_dim));
  put_le<std::uint32_t>(out, c.recurrent == Recurrent::kLstm ? 1 : 0);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.steps));
  put_f64(out, c.elu_alpha);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const Tensor& t : params.tensors) put_tensor(out, t);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.baselines.size()));
  for (double b : params.baselines) put_f64(out, b);
  put_le<std::uint8_t>(out, state != nullptr ? 1 : 0);
  if (state != nullptr) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(state->completed_epochs));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(state->velocity.size()));
    for (const Tensor& t : state->velocity) put_tensor(out, t);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("write_params: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write_params: short write to '" + path + "'");
}

AgentParams read_params(const std::string& path, TrainerState* state) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_params: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  ParamsReader r(buf.str(), path);
  r.expect_magic();
  std::uint32_t version = r.get_le<std::uint32_t>();
  if (version != 1) throw DataError(path + ": unsupported params version " + std::to_string(version));

  ModelConfig c;
  c.feature_dim = static_cast<int>(r.get_le<std::uint32_t>());
  c.classes = static_cast<int>(r.get_le<std::uint32_t>());
  c.grid_rows = static_cast<int>(r.get_le<std::uint32_t>());
  c.grid_cols = static_cast<int>(r.get_le<std::uint32_t>());
  c.loc_embed_dim = static_cast<int>(r.get_le<std::uint32_t>());
  c.hidden_dim = static_cast<int>(r.get_le<std::uint32_t>());
  c.adapter_dim = static_cast<int>(r.get_le<std::uint32_t>());
  c.recurrent = r.get_le<std::uint32_t>() == 1 ? Recurrent::kLstm : Recurrent::kLinear;
  c.steps = static_cast<int>(r.get_le<std::uint32_t>());
  c.elu_alpha = r.get_f64();

  // Rebuild through init so the layout always matches the config, then
  // overwrite the tensor contents.
  AgentParams p = AgentParams::init(c, /*seed=*/0);
  std::uint32_t count = r.get_le<std::uint32_t>();
  if (count != p.tensors.size())
    throw DataError(path + ": tensor count " + std::to_string(count) + " does not match config");
  for (Tensor& t : p.tensors) {
    Tensor loaded = r.get_tensor();
    require_same_shape(t, loaded, "read_params");
    t = std::move(loaded);
  }
  std::uint32_t nb = r.get_le<std::uint32_t>();
  p.baselines.assign(nb, 0.0);
  for (double& b : p.baselines) b = r.get_f64();

  bool has_state = r.get_le<std::uint8_t>() != 0;
  if (state != nullptr) {
    state->velocity.clear();
    state->completed_epochs = 0;
    if (has_state) {
      state->completed_epochs = static_cast<int>(r.get_le<std::uint32_t>());
      std::uint32_t nv = r.get_le<std::uint32_t>();
      for (std::uint32_t i = 0; i < nv; ++i) state->velocity.push_back(r.get_tensor());
    }
  }
  return p;
}

}  // namespace veram
