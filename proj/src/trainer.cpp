#include "veram/trainer.hpp"

#include <chrono>
#include <numeric>

#include <json.hpp>

#include "veram/errors.hpp"
#include "veram/rng.hpp"

namespace veram {

RunResult train_agent(const Dataset& train, const Dataset* eval_set, const ModelConfig& model,
                      const TrainConfig& cfg, const std::function<void(const EpochMetrics&)>& on_epoch,
                      AgentParams* resume_params, const TrainerState* resume_state) {
  if (train.shapes.empty()) throw DataError("train_agent: empty training set");
  if (cfg.batch < 1) throw UsageError("train_agent: batch must be >= 1");
  if (cfg.scheme.confidence_weighting() && !train.has_confidences())
    throw DataError("train_agent: variant '" + variant_name(cfg.scheme.variant) +
                    "' needs per-view confidences; run the confidence command on the dataset first");

  auto t0 = std::chrono::steady_clock::now();

  RunResult out;
  int start_epoch = 1;
  if (resume_params != nullptr) {
    out.params = *resume_params;
    out.sgd = SgdState::for_params(out.params.tensors, cfg.momentum);
    if (resume_state != nullptr && !resume_state->velocity.empty()) {
      out.sgd.velocity = resume_state->velocity;
      out.sgd.step_count = resume_state->completed_epochs;
      start_epoch = resume_state->completed_epochs + 1;
    }
  } else {
    out.params = AgentParams::init(model, cfg.seed);
    out.sgd = SgdState::for_params(out.params.tensors, cfg.momentum);
  }

  const int n = static_cast<int>(train.shapes.size());
  std::vector<int> order(static_cast<std::size_t>(n));

  for (int epoch = start_epoch; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(Rng::mix(cfg.seed, 0x0DDE6, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    TrainStepContext ctx;
    ctx.seed = cfg.seed;
    ctx.epoch = epoch;
    ctx.lr = lr_schedule(epoch, cfg.lr);
    ctx.threads = cfg.threads;

    EpochMetrics em;
    em.epoch = epoch;
    em.lr = ctx.lr;
    int batches = 0;
    for (int off = 0; off < n; off += cfg.batch) {
      std::vector<int> batch(order.begin() + off,
                             order.begin() + std::min(n, off + cfg.batch));
      LossReport rep = train_step(train, batch, out.params, out.sgd, cfg.scheme, ctx);
      em.nll += rep.nll;
      em.location += rep.location;
      em.train_acc += rep.accuracy;
      ++batches;
    }
    em.nll /= batches;
    em.location /= batches;
    em.train_acc /= batches;
    out.sgd.step_count = epoch;

    bool eval_now = eval_set != nullptr &&
                    (epoch == cfg.epochs || (cfg.eval_every > 0 && epoch % cfg.eval_every == 0));
    if (eval_now) {
      EvalReport er = evaluate(*eval_set, out.params, cfg.threads);
      em.eval_instance = er.instance_acc;
      em.eval_class = er.class_acc;
      if (epoch == cfg.epochs) {
        out.final_eval = er;
        out.has_final_eval = true;
      }
    }
    out.metrics.push_back(em);
    if (on_epoch) on_epoch(em);

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_prefix.empty() &&
        (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs)) {
      TrainerState st;
      st.velocity = out.sgd.velocity;
      st.completed_epochs = epoch;
      write_params(cfg.checkpoint_prefix + ".ckpt-" + std::to_string(epoch) + ".bin", out.params, &st);
    }
  }

  if (eval_set != nullptr && !out.has_final_eval) {
    out.final_eval = evaluate(*eval_set, out.params, cfg.threads);
    out.has_final_eval = true;
  }

  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string run_manifest_json(const Dataset& train, const ModelConfig& model, const TrainConfig& cfg,
                              const RunResult& result, const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["dataset_checksum"] = train.feature_checksum();
  j["config"] = {
      {"variant", variant_name(cfg.scheme.variant)},
      {"delta", cfg.scheme.delta},
      {"lambda_loc", cfg.scheme.lambda_loc},
      {"baseline_rate", cfg.scheme.baseline_rate},
      {"toroidal_distance", cfg.scheme.toroidal_distance},
      {"epochs", cfg.epochs},
      {"batch", cfg.batch},
      {"threads", cfg.threads},
      {"momentum", cfg.momentum},
      {"lr_initial", cfg.lr.initial},
      {"lr_minimum", cfg.lr.minimum},
      {"lr_hold_until_epoch", cfg.lr.hold_until_epoch},
      {"lr_floor_epoch", cfg.lr.floor_epoch},
      {"steps", model.steps},
      {"recurrent", model.recurrent == Recurrent::kLstm ? "lstm" : "linear"},
      {"hidden_dim", model.hidden_dim},
      {"loc_embed_dim", model.loc_embed_dim},
      {"adapter_dim", model.adapter_dim},
      {"feature_dim", model.feature_dim},
      {"classes", model.classes},
      {"grid_rows", model.grid_rows},
      {"grid_cols", model.grid_cols},
      {"elu_alpha", model.elu_alpha},
  };
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochMetrics& em : result.metrics) {
    nlohmann::json e = {
        {"epoch", em.epoch},  {"lr", em.lr},     {"nll", em.nll},
        {"loc", em.location}, {"train_acc", em.train_acc},
    };
    if (em.eval_instance) e["eval_instance"] = *em.eval_instance;
    if (em.eval_class) e["eval_class"] = *em.eval_class;
    epochs.push_back(std::move(e));
  }
  j["epochs"] = std::move(epochs);
  j["wall_seconds"] = result.wall_seconds;
  j["param_checksum"] = result.params.checksum();
  if (result.has_final_eval) {
    j["final_eval"] = {
        {"instance_acc", result.final_eval.instance_acc},
        {"class_acc", result.final_eval.class_acc},
        {"border_fraction", result.final_eval.border_fraction},
    };
  }
  return j.dump(2);
}

}  // namespace veram
