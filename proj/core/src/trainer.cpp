#include "qrw/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "qrw/jsonio.hpp"
#include "qrw/rng.hpp"
#include "qrw/text.hpp"

namespace qrw {
namespace {

struct SoftmaxEval {
  std::vector<double> logits;
  double lse = 0.0;

  double logp(std::size_t i) const { return logits[i] - lse; }
  double prob(std::size_t i) const { return std::exp(logits[i] - lse); }
};

// All log-probabilities in the trainer flow through this one evaluation so
// that identical parameters yield bit-identical values (the ratio-of-one
// reduction relies on it).
SoftmaxEval eval_softmax(const PolicyParams& params, const CandidateSet& set) {
  SoftmaxEval ev;
  ev.logits.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    ev.logits[i] = dot(params.theta, set.features[i]);
  }
  const double m = *std::max_element(ev.logits.begin(), ev.logits.end());
  double s = 0.0;
  for (double l : ev.logits) s += std::exp(l - m);
  ev.lse = m + std::log(s);
  return ev;
}

FeatureVec mean_feature(const SoftmaxEval& ev, const CandidateSet& set) {
  FeatureVec mean{};
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double p = ev.prob(i);
    for (int k = 0; k < kFeatureDim; ++k) mean[k] += p * set.features[i][k];
  }
  return mean;
}

struct PreparedSample {
  std::shared_ptr<const CandidateSet> set;
  std::size_t target_index = 0;
  bool usable = false;
};

std::vector<PreparedSample> prepare(const std::vector<TrainingSample>& dataset,
                                    const RewardOracle& oracle, std::size_t* skipped) {
  std::vector<PreparedSample> prepared;
  prepared.reserve(dataset.size());
  std::size_t skip = 0;
  for (const auto& sample : dataset) {
    PreparedSample ps;
    ps.set = std::make_shared<CandidateSet>(
        analyze_candidates(sample.q_orig, sample.context, oracle));
    const std::string key =
        sample.is_reject() ? std::string(kRejectToken) : normalize_query(sample.target);
    if (ps.set->contains(key)) {
      ps.target_index = ps.set->index_of(key);
      ps.usable = true;
    } else {
      ++skip;
    }
    prepared.push_back(std::move(ps));
  }
  if (skipped) *skipped = skip;
  return prepared;
}

LossGrad sft_over(const PolicyParams& params, const std::vector<PreparedSample>& prepared) {
  LossGrad out;
  std::size_t usable = 0;
  for (const auto& ps : prepared) {
    if (!ps.usable) continue;
    ++usable;
    const SoftmaxEval ev = eval_softmax(params, *ps.set);
    out.loss -= ev.logp(ps.target_index);
    const FeatureVec mean = mean_feature(ev, *ps.set);
    for (int k = 0; k < kFeatureDim; ++k) {
      out.grad[k] += mean[k] - ps.set->features[ps.target_index][k];
    }
  }
  if (usable == 0) throw TrainingError("no usable training samples (no target in candidates)");
  out.loss /= static_cast<double>(usable);
  for (double& g : out.grad) g /= static_cast<double>(usable);
  return out;
}

double reward_of_action(const std::string& text, const RewardOracle& oracle,
                        const RewardParams& rp) {
  if (text == kRejectToken) return rp.r_penalty;  // not a system query
  return oracle.reward(text, rp);
}

std::vector<GroupRollout> rollouts_over(const PolicyParams& params_old,
                                        const std::vector<TrainingSample>& dataset,
                                        const std::vector<PreparedSample>& prepared,
                                        const RewardOracle& oracle, const TrainConfig& cfg,
                                        std::uint64_t salt) {
  std::vector<GroupRollout> rollouts;
  rollouts.reserve(prepared.size());
  for (std::size_t k = 0; k < prepared.size(); ++k) {
    const auto& set = *prepared[k].set;
    const SoftmaxEval ev = eval_softmax(params_old, set);

    GroupRollout r;
    r.q = dataset[k].q_orig;
    r.ctx = dataset[k].context;
    r.set = prepared[k].set;

    Rng rng(mix_seed(cfg.seed, 0x67726f75ULL, salt, k));
    for (int g = 0; g < cfg.group_size; ++g) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t idx = set.size() - 1;
      for (std::size_t i = 0; i < set.size(); ++i) {
        acc += ev.prob(i);
        if (u < acc) {
          idx = i;
          break;
        }
      }
      r.draw_indices.push_back(idx);
      r.draws.push_back(set.candidates[idx]);
      r.rewards.push_back(reward_of_action(set.candidates[idx].text, oracle, cfg.reward));
      r.old_logprobs.push_back(ev.logp(idx));
    }
    rollouts.push_back(std::move(r));
  }
  return rollouts;
}

struct HybridTerms {
  LossGrad total;
  double mean_reward = 0.0;
};

HybridTerms hybrid_over(const PolicyParams& params, const PolicyParams& params_ref,
                        const std::vector<PreparedSample>& sft_prepared,
                        const std::vector<GroupRollout>& rollouts, const TrainConfig& cfg) {
  HybridTerms out;
  out.total = sft_over(params, sft_prepared);
  if (rollouts.empty()) return out;

  const double n = static_cast<double>(rollouts.size());
  double rl_value = 0.0;
  FeatureVec rl_grad{};
  double reward_sum = 0.0;
  std::size_t reward_count = 0;

  for (const auto& r : rollouts) {
    if (!r.set) throw ContractError("rollout lacks its candidate set");
    const auto& set = *r.set;
    const std::size_t g = r.draws.size();
    if (g < 2 || r.rewards.size() != g || r.old_logprobs.size() != g ||
        r.draw_indices.size() != g) {
      throw ContractError("rollout group fields must share size >= 2");
    }
    const SoftmaxEval ev = eval_softmax(params, set);
    const SoftmaxEval ev_ref = eval_softmax(params_ref, set);
    const FeatureVec mean = mean_feature(ev, set);

    const std::vector<double> adv = grpo_advantages(r.rewards, cfg.epsilon_adv);
    double surr = 0.0;
    FeatureVec surr_grad{};
    for (std::size_t i = 0; i < g; ++i) {
      const std::size_t idx = r.draw_indices[i];
      const double ratio = std::exp(ev.logp(idx) - r.old_logprobs[i]);
      if (!std::isfinite(ratio)) throw TrainingError("nonfinite importance ratio");
      surr += ratio * adv[i];
      const double w = adv[i] * ratio;
      for (int k = 0; k < kFeatureDim; ++k) {
        surr_grad[k] += w * (set.features[idx][k] - mean[k]);
      }
      reward_sum += r.rewards[i];
      ++reward_count;
    }
    const double inv_g = 1.0 / static_cast<double>(g);
    surr *= inv_g;
    for (double& v : surr_grad) v *= inv_g;

    // Exact KL(pi_theta || pi_ref) and its gradient over the finite support.
    double kl = 0.0;
    FeatureVec kl_grad{};
    for (std::size_t j = 0; j < set.size(); ++j) {
      const double p = ev.prob(j);
      const double log_ratio = ev.logp(j) - ev_ref.logp(j);
      kl += p * log_ratio;
      for (int k = 0; k < kFeatureDim; ++k) {
        kl_grad[k] += p * log_ratio * (set.features[j][k] - mean[k]);
      }
    }

    rl_value += surr - cfg.gamma * kl;
    for (int k = 0; k < kFeatureDim; ++k) {
      rl_grad[k] += surr_grad[k] - cfg.gamma * kl_grad[k];
    }
  }

  out.total.loss -= cfg.beta * (rl_value / n);
  for (int k = 0; k < kFeatureDim; ++k) {
    out.total.grad[k] -= cfg.beta * (rl_grad[k] / n);
  }
  out.mean_reward = reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
  return out;
}

}  // namespace

LossGrad sft_loss_and_grad(const PolicyParams& params,
                           const std::vector<TrainingSample>& dataset,
                           const RewardOracle& oracle, std::size_t* skipped) {
  return sft_over(params, prepare(dataset, oracle, skipped));
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards, double epsilon_adv) {
  if (rewards.size() < 2) throw ContractError("grpo_advantages needs at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;  // population standard deviation
  const double denom = std::sqrt(var) + epsilon_adv;
  std::vector<double> adv(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

double kl_exact(const PolicyDistribution& dist_p, const PolicyDistribution& dist_q) {
  if (dist_p.candidates != dist_q.candidates) {
    throw ContractError("kl_exact requires identical candidate lists");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < dist_p.probs.size(); ++i) {
    // p can underflow to 0 under extreme parameters; x ln x -> 0.
    if (dist_p.probs[i] == 0.0) continue;
    kl += dist_p.probs[i] * std::log(dist_p.probs[i] / dist_q.probs[i]);
  }
  return kl;
}

std::vector<GroupRollout> make_rollouts(const PolicyParams& params_old,
                                        const std::vector<TrainingSample>& dataset,
                                        const RewardOracle& oracle, const TrainConfig& cfg,
                                        std::uint64_t rollout_salt) {
  cfg.validate();
  const auto prepared = prepare(dataset, oracle, nullptr);
  return rollouts_over(params_old, dataset, prepared, oracle, cfg, rollout_salt);
}

LossGrad hybrid_loss_and_grad(const PolicyParams& params, const PolicyParams& params_old,
                              const PolicyParams& params_ref,
                              const std::vector<TrainingSample>& sft_batch,
                              const std::vector<GroupRollout>& rollouts,
                              const TrainConfig& cfg, const RewardOracle& oracle) {
  (void)params_old;  // pi_old enters through the rollouts' stored logprobs
  cfg.validate();
  return hybrid_over(params, params_ref, prepare(sft_batch, oracle, nullptr), rollouts, cfg)
      .total;
}

std::pair<PolicyParams, TrainReport> train(const std::vector<TrainingSample>& dataset,
                                           const RewardOracle& oracle, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw TrainingError("empty training dataset");

  TrainReport report;
  auto prepared = prepare(dataset, oracle, &report.skipped_samples);

  PolicyParams params;  // theta = 0

  for (int epoch = 0; epoch < cfg.sft_epochs; ++epoch) {
    const LossGrad lg = sft_over(params, prepared);
    if (!std::isfinite(lg.loss)) {
      throw TrainingError("SFT loss diverged at epoch " + std::to_string(epoch) + " after " +
                          std::to_string(report.sft_losses.size()) + " recorded epochs");
    }
    report.sft_losses.push_back(lg.loss);
    for (int k = 0; k < kFeatureDim; ++k) {
      params.theta[k] -= cfg.learning_rate * lg.grad[k];
    }
  }

  const PolicyParams params_ref = params;

  for (int iter = 0; iter < cfg.grpo_iters; ++iter) {
    const PolicyParams params_old = params;
    const auto rollouts = rollouts_over(params_old, dataset, prepared, oracle, cfg,
                                        static_cast<std::uint64_t>(iter));
    const HybridTerms terms = hybrid_over(params, params_ref, prepared, rollouts, cfg);
    if (!std::isfinite(terms.total.loss)) {
      throw TrainingError("hybrid loss diverged at GRPO iteration " + std::to_string(iter) +
                          " after " + std::to_string(report.grpo.size()) + " recorded iterations");
    }

    GrpoIterStats stats;
    stats.iter = iter;
    stats.mean_reward = terms.mean_reward;
    stats.hybrid_loss = terms.total.loss;
    stats.sft_loss = sft_over(params, prepared).loss;

    for (int k = 0; k < kFeatureDim; ++k) {
      params.theta[k] -= cfg.learning_rate * terms.total.grad[k];
    }

    double kl_sum = 0.0;
    for (const auto& ps : prepared) {
      const SoftmaxEval ev = eval_softmax(params, *ps.set);
      const SoftmaxEval ev_ref = eval_softmax(params_ref, *ps.set);
      for (std::size_t j = 0; j < ps.set->size(); ++j) {
        kl_sum += ev.prob(j) * (ev.logp(j) - ev_ref.logp(j));
      }
    }
    stats.kl_to_ref = kl_sum / static_cast<double>(prepared.size());
    if (!std::isfinite(stats.kl_to_ref)) throw TrainingError("KL to reference diverged");
    report.grpo.push_back(stats);
  }

  return {params, report};
}

PolicyEvaluation evaluate_policy(const PolicyParams& params,
                                 const std::vector<TrainingSample>& dataset,
                                 const RewardOracle& oracle, const RewardParams& rparams) {
  PolicyEvaluation ev;
  if (dataset.empty()) return ev;
  std::size_t skipped = 0;
  const auto prepared = prepare(dataset, oracle, &skipped);
  double reward_acc = 0.0;
  double target_acc = 0.0;
  double uniform_acc = 0.0;
  for (std::size_t k = 0; k < prepared.size(); ++k) {
    const auto& set = *prepared[k].set;
    const SoftmaxEval sm = eval_softmax(params, set);
    double expected = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      expected += sm.prob(i) * reward_of_action(set.candidates[i].text, oracle, rparams);
    }
    reward_acc += expected;
    if (prepared[k].usable) {
      target_acc += sm.prob(prepared[k].target_index);
      uniform_acc += 1.0 / static_cast<double>(set.size());
      ++ev.usable;
    }
  }
  ev.mean_expected_reward = reward_acc / static_cast<double>(prepared.size());
  if (ev.usable > 0) {
    ev.mean_target_prob = target_acc / static_cast<double>(ev.usable);
    ev.mean_uniform_prob = uniform_acc / static_cast<double>(ev.usable);
  }
  return ev;
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["std_kind"] = std_kind;
  j["skipped_samples"] = skipped_samples;
  j["sft_losses"] = sft_losses;
  nlohmann::ordered_json iters = nlohmann::ordered_json::array();
  for (const auto& s : grpo) {
    iters.push_back({{"iter", s.iter},
                     {"sft_loss", s.sft_loss},
                     {"mean_reward", s.mean_reward},
                     {"kl_to_ref", s.kl_to_ref},
                     {"hybrid_loss", s.hybrid_loss}});
  }
  j["grpo"] = std::move(iters);
  return j.dump(2);
}

TrainConfig train_config_from_json_string(const std::string& json_text) {
  TrainConfig cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  cfg.group_size = j.value("group_size", cfg.group_size);
  cfg.beta = j.value("beta", cfg.beta);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.epsilon_adv = j.value("epsilon_adv", cfg.epsilon_adv);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.sft_epochs = j.value("sft_epochs", cfg.sft_epochs);
  cfg.grpo_iters = j.value("grpo_iters", cfg.grpo_iters);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    cfg.reward.lambda1 = r.value("lambda1", cfg.reward.lambda1);
    cfg.reward.lambda2 = r.value("lambda2", cfg.reward.lambda2);
    cfg.reward.r_penalty = r.value("r_penalty", cfg.reward.r_penalty);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  return train_config_from_json_string(read_text_file(path));
}

}  // namespace qrw
