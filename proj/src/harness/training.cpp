#include "lhopt/harness/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "lhopt/harness/worker_pool.hpp"

namespace lhopt::harness {

namespace {

constexpr std::uint64_t train_task_stream = 0x747261696e2d7461ULL;
constexpr std::uint64_t noise_stream = 0x747261696e2d6e6fULL;
constexpr std::uint64_t rollout_stream = 0x747261696e2d726fULL;
constexpr std::uint64_t heldout_stream = 0x68656c642d6f7574ULL;
constexpr std::uint64_t controller_stream = 0x636f6e74726f6c6cULL;
constexpr std::uint64_t ppo_stream = 0x70706f2d73656564ULL;

void sync_baseline(const policy::Controller& current, policy::Controller& baseline, double beta) {
    reward::ema_baseline_sync(current.policy_net().params(), baseline.policy_net().params(), beta);
    reward::ema_baseline_sync(current.value_net().params(), baseline.value_net().params(), beta);
    baseline.policy_normalizer() = current.policy_normalizer();
    baseline.value_normalizer() = current.value_normalizer();
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

actions::ActionSpace TrainingConfig::space() const { return actions::ActionSpace::from_names(heads, restart_head); }

void TrainingConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("training: iterations must be positive");
    if (policy_repeats < 1 || policy_repeats > 16)
        throw std::invalid_argument("training: policy_repeats must be in [1, 16]");
    if (!(baseline_beta >= 0.0 && baseline_beta <= 1.0))
        throw std::invalid_argument("training: baseline_beta must be in [0, 1]");
    if (hidden < 1) throw std::invalid_argument("training: hidden size must be positive");
    if (distribution.episode.outer_min < 2) throw std::invalid_argument("training: episodes need at least 2 outer steps");
    if (heldout_tasks < 0 || eval_every < 0) throw std::invalid_argument("training: held-out settings must be >= 0");
    ppo.validate();
}

HeldoutSet make_heldout_set(const tasks::TaskDistribution& dist, const TrainingConfig& config) {
    HeldoutSet set;
    set.tasks = sample_eval_tasks(dist, static_cast<std::size_t>(config.heldout_tasks),
                                  derive_seed(config.seed, heldout_stream), config.cadence);
    const auto space = config.space();
    set.rewards.resize(set.tasks.size());
    parallel_for(set.tasks.size(), [&](std::size_t i) {
        EpisodeContext ctx;
        ctx.task = set.tasks[i].task.get();
        ctx.config = set.tasks[i].episode;
        ctx.initial_hypers = optim::initial_hyper_params();
        ctx.space = space;
        ctx.bounds = config.bounds;
        set.rewards[i] = make_reward_context(run_episode(ctx, StaticDriver{}).learning_curve());
    });
    return set;
}

HeldoutEval score_heldout(const policy::Controller& controller, const HeldoutSet& set, const TrainingConfig& config,
                          int iteration) {
    HeldoutEval eval;
    eval.iteration = iteration;
    eval.rewards.assign(set.tasks.size(), 0.0);
    const auto space = config.space();
    parallel_for(set.tasks.size(), [&](std::size_t i) {
        const auto& t = set.tasks[i];
        EpisodeContext ctx;
        ctx.task = t.task.get();
        ctx.config = t.episode;
        ctx.initial_hypers = optim::initial_hyper_params();
        ctx.space = space;
        ctx.bounds = config.bounds;
        ctx.task_encoding = t.task_encoding;
        ctx.initial_noise = actions::InitialNoise{}.encode();
        const auto result = run_episode(ctx, PolicyDriver{&controller, 0, true, &set.rewards[i]});
        eval.rewards[i] =
            reward::reward_from_loss(set.rewards[i].fit, set.rewards[i].baseline, result.final_valid_loss).value;
    });
    eval.mean = mean_of(eval.rewards);
    return eval;
}

TrainingResult train_outer(const TrainingConfig& config, const std::function<void(const TrainingLogEntry&)>& on_iteration,
                           const std::function<void(const HeldoutEval&)>& on_heldout) {
    config.validate();
    const tasks::TaskDistribution dist(config.distribution);
    const auto space = config.space();
    const auto layout = make_layout(space, dist.encoding_width(), actions::InitialNoise{}.encode().size());

    TrainingResult out;
    out.controller = policy::Controller(layout, config.hidden, derive_seed(config.seed, controller_stream));
    out.baseline = out.controller;
    policy::PpoTrainer trainer(config.ppo, derive_seed(config.seed, ppo_stream));
    policy::RolloutBuffer buffer(config.ppo.max_reuse);

    const bool heldout_enabled = config.heldout_tasks > 0 && config.eval_every > 0;
    HeldoutSet heldout;
    if (heldout_enabled) {
        heldout = make_heldout_set(dist, config);
        out.heldout.push_back(score_heldout(out.controller, heldout, config, 0));
        if (on_heldout) on_heldout(out.heldout.back());
    }

    int nonfinite_streak = 0;
    for (int it = 0; it < config.iterations; ++it) {
        const std::uint64_t task_seed = derive_seed(config.seed, train_task_stream, static_cast<std::uint64_t>(it));
        const auto sampled = dist.sample(task_seed);
        actions::InitialNoise noise;
        if (config.initial_noise) {
            Rng rng(derive_seed(task_seed, noise_stream));
            noise = actions::sample_initial_noise(rng);
        }
        EpisodeContext ctx;
        ctx.task = sampled.task.get();
        ctx.config.outer_steps = sampled.outer_steps();
        ctx.config.inner_per_outer = sampled.inner_per_outer();
        ctx.config.cadence = config.cadence;
        ctx.initial_hypers = actions::apply_initial_noise(optim::initial_hyper_params(), noise, config.bounds);
        ctx.space = space;
        ctx.bounds = config.bounds;
        ctx.task_encoding = sampled.encoding;
        ctx.initial_noise = noise.encode();

        // The baseline sees the identical task: same weights, batches and noise.
        const auto base = run_episode(ctx, PolicyDriver{&out.baseline, derive_seed(task_seed, rollout_stream, 0),
                                                        false, nullptr});
        ++out.baseline_runs;
        const RewardContext reward_ctx = make_reward_context(base.learning_curve());

        const auto repeats = static_cast<std::size_t>(config.policy_repeats);
        std::vector<EpisodeResult> runs(repeats);
        std::vector<double> terminal(repeats, 0.0);
        parallel_for(repeats, [&](std::size_t r) {
            runs[r] = run_episode(ctx, PolicyDriver{&out.controller, derive_seed(task_seed, rollout_stream, r + 1),
                                                    false, &reward_ctx});
            if (runs[r].initial_params_hash != base.initial_params_hash)
                throw std::logic_error("training: baseline and policy runs started from different weights");
            terminal[r] = assign_rewards(runs[r], reward_ctx);
        });
        out.policy_runs += repeats;

        TrainingLogEntry entry;
        entry.iteration = it;
        entry.task_seed = task_seed;
        entry.family = tasks::family_name(sampled.choices.family);
        entry.baseline_final_loss = base.final_valid_loss;
        entry.terminal_rewards = terminal;
        entry.mean_terminal_reward = mean_of(terminal);
        std::vector<double> losses;
        for (const auto& r : runs) losses.push_back(r.final_valid_loss);
        entry.mean_policy_final_loss = mean_of(losses);

        const bool all_bad = std::none_of(terminal.begin(), terminal.end(), [](double r) { return std::isfinite(r); });
        nonfinite_streak = all_bad ? nonfinite_streak + 1 : 0;
        if (nonfinite_streak >= config.max_nonfinite_iterations)
            throw std::runtime_error("training aborted: " + std::to_string(nonfinite_streak) +
                                     " consecutive iterations with non-finite rewards (last task " +
                                     sampled.task->describe() + ")");

        if (config.learn && !all_bad) {
            for (auto& r : runs) buffer.add(r.trajectory);
            const auto batch = buffer.take_batch();
            std::vector<const policy::Trajectory*> ptrs;
            for (const auto& t : batch) ptrs.push_back(&t);
            entry.ppo = trainer.update(out.controller, ptrs);
            out.max_reuse_observed = std::max(out.max_reuse_observed, buffer.max_uses_observed());
            for (const auto& r : runs) {
                for (const auto& raw : r.raw_policy_features) out.controller.policy_normalizer().observe(raw);
                for (const auto& raw : r.raw_value_features) out.controller.value_normalizer().observe(raw);
            }
            sync_baseline(out.controller, out.baseline, config.baseline_beta);
        }
        out.log.push_back(entry);
        if (on_iteration) on_iteration(entry);

        if (heldout_enabled && (it + 1) % config.eval_every == 0) {
            out.heldout.push_back(score_heldout(out.controller, heldout, config, it + 1));
            if (on_heldout) on_heldout(out.heldout.back());
        }
    }
    return out;
}

QuintileTest quintile_test(const std::vector<HeldoutEval>& evals) {
    QuintileTest out;
    if (evals.size() < 2) throw std::invalid_argument("quintile test: need at least two evaluations");
    const std::size_t q = std::max<std::size_t>(1, evals.size() / 5);
    const std::size_t tasks = evals.front().rewards.size();
    if (tasks < 2) throw std::invalid_argument("quintile test: need at least two held-out tasks");
    std::vector<double> diff(tasks, 0.0);
    for (std::size_t i = 0; i < tasks; ++i) {
        double first = 0.0, last = 0.0;
        for (std::size_t e = 0; e < q; ++e) {
            first += evals[e].rewards.at(i);
            last += evals[evals.size() - q + e].rewards.at(i);
        }
        first /= static_cast<double>(q);
        last /= static_cast<double>(q);
        out.first_mean += first / static_cast<double>(tasks);
        out.last_mean += last / static_cast<double>(tasks);
        diff[i] = last - first;
    }
    out.pairs = tasks;
    const double mean = mean_of(diff);
    double ss = 0.0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / static_cast<double>(tasks - 1));
    if (sd == 0.0) {
        out.t_statistic = mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        out.p_value = mean > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.t_statistic = mean / (sd / std::sqrt(static_cast<double>(tasks)));
    const boost::math::students_t dist(static_cast<double>(tasks - 1));
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.t_statistic));
    return out;
}

std::string training_log_csv(const TrainingResult& result) {
    std::ostringstream os;
    os.precision(17);
    os << "iteration,task_seed,family,baseline_final_loss,mean_policy_final_loss,mean_terminal_reward,"
          "policy_loss,value_loss,entropy,clip_fraction,approx_kl\n";
    for (const auto& e : result.log)
        os << e.iteration << ',' << e.task_seed << ',' << e.family << ',' << e.baseline_final_loss << ','
           << e.mean_policy_final_loss << ',' << e.mean_terminal_reward << ',' << e.ppo.policy_loss << ','
           << e.ppo.value_loss << ',' << e.ppo.entropy << ',' << e.ppo.clip_fraction << ',' << e.ppo.approx_kl
           << '\n';
    return os.str();
}

} // namespace lhopt::harness
