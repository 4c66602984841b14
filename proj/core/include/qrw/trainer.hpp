#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qrw/mining.hpp"
#include "qrw/policy.hpp"
#include "qrw/reward.hpp"

namespace qrw {

struct TrainConfig {
  int group_size = 8;        // GRPO group G
  double beta = 0.5;         // RL contribution in the hybrid loss
  double gamma = 0.1;        // KL weight
  double epsilon_adv = 1e-8; // advantage denominator guard
  double learning_rate = 0.5;
  int sft_epochs = 400;      // full-batch steps; the NLL objective is convex
  int grpo_iters = 100;
  std::uint64_t seed = 0;
  RewardParams reward;

  void validate() const {
    if (group_size < 2) throw ConfigError("group_size must be >= 2");
    if (!(epsilon_adv > 0.0)) throw ConfigError("epsilon_adv must be > 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (sft_epochs < 0 || grpo_iters < 0) throw ConfigError("epoch counts must be >= 0");
    reward.validate();
  }
};

TrainConfig train_config_from_json_string(const std::string& json_text);
TrainConfig load_train_config(const std::string& path);

// One sampled group for one input. old_logprobs are log pi_old of each draw
// at rollout time; they and the rewards are constants under the gradient.
struct GroupRollout {
  std::string q;
  UserContext ctx;
  std::vector<Candidate> draws;
  std::vector<std::size_t> draw_indices;
  std::vector<double> rewards;
  std::vector<double> old_logprobs;
  std::shared_ptr<const CandidateSet> set;  // candidate support for (q, ctx)
};

struct GrpoIterStats {
  int iter = 0;
  double sft_loss = 0.0;
  double mean_reward = 0.0;
  double kl_to_ref = 0.0;
  double hybrid_loss = 0.0;

  bool operator==(const GrpoIterStats&) const = default;
};

struct TrainReport {
  std::string std_kind = "population";  // sigma convention in the advantage normalizer
  std::vector<double> sft_losses;       // one per SFT epoch, pre-step
  std::vector<GrpoIterStats> grpo;      // one per GRPO iteration
  std::size_t skipped_samples = 0;      // targets absent from their candidate set

  bool operator==(const TrainReport&) const = default;
  std::string to_json() const;
};

struct LossGrad {
  double loss = 0.0;
  FeatureVec grad{};
};

// Mean negative log-likelihood of targets over usable samples (those whose
// target text appears in their candidate set; reject always does). Throws
// TrainingError when no sample is usable.
LossGrad sft_loss_and_grad(const PolicyParams& params,
                           const std::vector<TrainingSample>& dataset,
                           const RewardOracle& oracle, std::size_t* skipped = nullptr);

// A_i = (R_i - mean(R)) / (popstd(R) + epsilon_adv); size >= 2 required.
std::vector<double> grpo_advantages(const std::vector<double>& rewards, double epsilon_adv);

// Exact KL over the shared finite support; candidate lists must match.
double kl_exact(const PolicyDistribution& dist_p, const PolicyDistribution& dist_q);

// Groups drawn from pi(params_old) for every dataset input. The reject
// action is scored r_penalty (it is not a system query).
std::vector<GroupRollout> make_rollouts(const PolicyParams& params_old,
                                        const std::vector<TrainingSample>& dataset,
                                        const RewardOracle& oracle, const TrainConfig& cfg,
                                        std::uint64_t rollout_salt = 0);

// L_total = L_SFT - beta * mean over rollouts of
//             [(1/G) sum_i ratio_i * A_i - gamma * KL(pi_theta || pi_ref)]
// with ratio_i = pi_theta(draw_i) / pi_old(draw_i). Advantages and pi_old
// are constants; the gradient flows through ratio and KL only. The oracle
// rebuilds candidate features for the SFT batch.
LossGrad hybrid_loss_and_grad(const PolicyParams& params, const PolicyParams& params_old,
                              const PolicyParams& params_ref,
                              const std::vector<TrainingSample>& sft_batch,
                              const std::vector<GroupRollout>& rollouts,
                              const TrainConfig& cfg, const RewardOracle& oracle);

// Stage 1: sft_epochs of full-batch gradient descent. Stage 2: grpo_iters of
// snapshot -> rollout -> hybrid descent, with pi_ref frozen at the post-SFT
// parameters. Deterministic for a fixed cfg.seed.
std::pair<PolicyParams, TrainReport> train(const std::vector<TrainingSample>& dataset,
                                           const RewardOracle& oracle, const TrainConfig& cfg);

struct PolicyEvaluation {
  double mean_expected_reward = 0.0;  // mean over inputs of E_pi[R]
  double mean_target_prob = 0.0;      // mean pi(target) over usable samples
  double mean_uniform_prob = 0.0;     // mean 1/|candidates| over usable samples
  std::size_t usable = 0;
};

PolicyEvaluation evaluate_policy(const PolicyParams& params,
                                 const std::vector<TrainingSample>& dataset,
                                 const RewardOracle& oracle, const RewardParams& rparams);

}  // namespace qrw
