#include "lhopt/harness/episode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "lhopt/actions/checkpoint.hpp"
#include "lhopt/features/similarity.hpp"
#include "lhopt/optim/ciao.hpp"

namespace lhopt::harness {

namespace {

/// Index of base 5 in the default integral-CDF bases.
constexpr std::size_t percentile_base = 2;

double distance(const TensorList& a, const TensorList& b) {
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t i = 0; i < a[t].values.size(); ++i) {
            const double d = a[t].values[i] - b[t].values[i];
            acc += d * d;
        }
    return std::sqrt(acc);
}

std::optional<double> probe_noise(const tasks::InnerTask& task, const TensorList& params, std::size_t step,
                                  const tasks::TrainStep& ts) {
    try {
        const auto probe = task.noise_probe(params, step, ts);
        return features::estimate_noise_scale(probe.small_norm_sq, probe.big_norm_sq, probe.small_batch,
                                              probe.big_batch);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

/// Running reward-so-far: the shaping potential after the steps seen so far.
class PotentialTracker {
public:
    explicit PotentialTracker(const RewardContext* ctx) : ctx_(ctx) {}

    double potential() const noexcept { return potential_; }

    void observe(double valid_loss) {
        if (!ctx_ || !std::isfinite(valid_loss)) return;
        best_ = std::min(best_, valid_loss);
        potential_ = reward::reward_from_loss(ctx_->fit, ctx_->baseline, best_, ctx_->config).value;
    }

private:
    const RewardContext* ctx_;
    double best_ = std::numeric_limits<double>::infinity();
    double potential_ = 0.0;
};

} // namespace

void EpisodeConfig::validate() const {
    if (outer_steps < 2) throw std::invalid_argument("episode: at least 2 outer steps required");
    if (inner_per_outer < 1) throw std::invalid_argument("episode: at least 1 inner step per outer step required");
    if (cadence < 1) throw std::invalid_argument("episode: cadence must be positive");
}

features::FeatureLayout make_layout(const actions::ActionSpace& space, std::size_t task_encoding_width,
                                    std::size_t initial_noise_width) {
    features::FeatureLayout layout;
    layout.head_arities = space.arities();
    layout.hyper_names = space.hyper_names();
    layout.checkpoint_slots = actions::checkpoint_slots;
    layout.task_encoding_width = task_encoding_width;
    layout.initial_noise_width = initial_noise_width;
    return layout;
}

RewardContext make_reward_context(const reward::LearningCurve& baseline, const reward::RewardConfig& config) {
    RewardContext ctx;
    ctx.baseline = baseline;
    ctx.config = config;
    ctx.fit = reward::fit_power_law(baseline);
    auto& s = ctx.summary;
    s.min_loss = std::numeric_limits<double>::infinity();
    s.max_loss = -std::numeric_limits<double>::infinity();
    for (const auto& p : baseline.points) {
        s.min_loss = std::min(s.min_loss, p.loss);
        s.max_loss = std::max(s.max_loss, p.loss);
    }
    s.final_loss = baseline.points.back().loss;
    s.fit_a = ctx.fit.a;
    s.fit_b = ctx.fit.b;
    s.fit_c = ctx.fit.c;
    return ctx;
}

reward::LearningCurve EpisodeResult::learning_curve() const {
    reward::LearningCurve out;
    for (const auto& r : curve) out.points.push_back({r.progress, r.valid_loss});
    return out;
}

EpisodeResult run_episode(const EpisodeContext& ctx, const Driver& driver) {
    if (!ctx.task) throw std::invalid_argument("episode: no task");
    ctx.config.validate();
    if (!ctx.bounds.contains(ctx.initial_hypers)) throw std::invalid_argument("episode: initial hypers out of bounds");
    const auto& task = *ctx.task;
    const auto& cfg = ctx.config;
    const std::size_t K = static_cast<std::size_t>(cfg.outer_steps);
    const std::size_t M = static_cast<std::size_t>(cfg.inner_per_outer);
    const std::size_t T = cfg.total_inner_steps();

    const auto* policy_driver = std::get_if<PolicyDriver>(&driver);
    const auto* schedule_driver = std::get_if<ScheduleDriver>(&driver);
    const features::FeatureLayout layout =
        make_layout(ctx.space, ctx.task_encoding.size(), ctx.initial_noise.size());
    if (policy_driver) {
        if (!policy_driver->controller) throw std::invalid_argument("episode: policy driver without controller");
        const auto& cl = policy_driver->controller->layout();
        if (cl.head_arities != layout.head_arities || features::layout_hash(cl) != features::layout_hash(layout))
            throw std::invalid_argument("episode: controller layout does not match the action space and extras");
    }
    if (schedule_driver && !schedule_driver->schedule) throw std::invalid_argument("episode: schedule driver without schedule");

    EpisodeResult result;
    actions::LiveState live{task.initial_params(), {}, ctx.initial_hypers};
    live.optimizer = optim::InnerState(live.params);
    result.initial_params_hash = hash_tensors(live.params);
    actions::CheckpointStore store;
    std::vector<std::optional<features::CheckpointInfo>> checkpoint_info(actions::checkpoint_slots);

    features::PolicyFeatureExtractor extractor(layout);
    features::IntegralCdf valid_stream;
    features::InnerStatsAccumulator inner_acc(cfg.cadence);
    PotentialTracker potential(policy_driver ? policy_driver->reward : nullptr);
    Rng action_rng(policy_driver ? policy_driver->sample_seed : 0);
    policy::LstmState pstate, vstate;
    if (policy_driver) {
        pstate = policy_driver->controller->initial_policy_state();
        vstate = policy_driver->controller->initial_value_state();
    }

    double train_loss = task.train_step(live.params, 0).loss;
    double valid_loss = task.validation_loss(live.params);
    double prev_norm = global_norm(live.params);
    TensorList params_at_prev_outer = live.params;
    std::vector<int> previous_action;
    std::size_t step = 0;

    for (std::size_t k = 0; k < K; ++k) {
        const double progress = static_cast<double>(k) / static_cast<double>(K);
        const double percentile = valid_stream.rank_then_observe(std::log(valid_loss), progress)[percentile_base];
        OuterRecord rec;
        rec.progress = progress;

        if (policy_driver) {
            const auto& controller = *policy_driver->controller;
            features::RunSnapshot snap;
            snap.progress = progress;
            snap.previous_action = previous_action;
            snap.train_loss = train_loss;
            snap.valid_loss = valid_loss;
            snap.checkpoints = checkpoint_info;
            for (const auto& head : ctx.space.heads)
                snap.hyper_ratios.push_back(optim::hyper_value(live.hypers, head.target) /
                                            optim::hyper_value(ctx.initial_hypers, head.target));
            snap.param_norm = global_norm(live.params);
            snap.previous_param_norm = prev_norm;
            snap.update_norm = distance(live.params, params_at_prev_outer);
            snap.inner = inner_acc.means();
            prev_norm = snap.param_norm;
            params_at_prev_outer = live.params;
            inner_acc.reset();

            auto raw = extractor.extract(snap);
            features::ValueExtras extras;
            extras.task_encoding = ctx.task_encoding;
            extras.initial_noise = ctx.initial_noise;
            extras.reward_so_far = potential.potential();
            extras.train_loss = train_loss;
            extras.valid_loss = valid_loss;
            if (policy_driver->reward) extras.baseline = policy_driver->reward->summary;
            auto raw_value = features::assemble_value_features(raw, extras, layout);

            policy::TrajectoryStep ts;
            ts.policy_features = controller.policy_normalizer().normalize(raw);
            ts.value_features = controller.value_normalizer().normalize(raw_value);
            const auto dists = controller.policy_step(ts.policy_features, pstate);
            ts.value = controller.value_step(ts.value_features, vstate);
            ts.actions = policy_driver->greedy ? policy::greedy_actions(dists) : policy::sample_actions(dists, action_rng);
            ts.log_prob = policy::joint_log_prob(dists, ts.actions);
            rec.actions = ts.actions;

            if (ctx.space.restart_head) rec.restart = ts.actions.back();
            result.trajectory.steps.push_back(std::move(ts));
            result.raw_policy_features.push_back(std::move(raw));
            result.raw_value_features.push_back(std::move(raw_value));
            previous_action = rec.actions;
        } else if (schedule_driver) {
            const auto& sr = schedule_driver->schedule->at(progress);
            if (schedule_driver->apply_restarts && sr.progress == progress) rec.restart = sr.restart;
        }

        if (rec.restart != 0) {
            const auto outcome = store.apply(static_cast<std::size_t>(rec.restart), live, progress, percentile);
            rec.restart_empty_slot = outcome.empty_slot;
            if (outcome.action.op == actions::RestartOp::save || outcome.action.op == actions::RestartOp::swap) {
                for (std::size_t s = 0; s < actions::checkpoint_slots; ++s) {
                    const auto& slot = store.slot(s);
                    checkpoint_info[s] = slot ? std::optional<features::CheckpointInfo>(
                                                    {slot->loss_percentile, slot->progress})
                                              : std::nullopt;
                }
            }
        }

        if (policy_driver) {
            for (std::size_t h = 0; h < ctx.space.heads.size(); ++h)
                live.hypers = actions::apply_action(live.hypers, ctx.space.heads[h],
                                                    static_cast<std::size_t>(rec.actions[h]), ctx.bounds);
        } else if (schedule_driver) {
            live.hypers = schedule_driver->schedule->at(progress).hypers;
        }
        rec.hypers = live.hypers;
        result.outer.push_back(rec);

        double block_loss_sum = 0.0;
        for (std::size_t i = 0; i < M; ++i, ++step) {
            const auto ts = task.train_step(live.params, step);
            std::optional<double> noise;
            if (cfg.probe_noise && policy_driver && inner_acc.should_sample(step))
                noise = probe_noise(task, live.params, step, ts);
            const auto stats = optim::ciao_step(live.params, ts.grads, live.hypers, live.optimizer);
            if (policy_driver) inner_acc.accumulate(stats, step, noise);
            block_loss_sum += ts.loss;
            if ((step + 1) % cfg.cadence == 0 || step + 1 == T) {
                CurveRecord cr;
                cr.step = step + 1;
                cr.progress = static_cast<double>(step + 1) / static_cast<double>(T);
                cr.train_loss = ts.loss;
                cr.valid_loss = task.validation_loss(live.params);
                cr.hypers = live.hypers;
                result.curve.push_back(cr);
            }
        }
        train_loss = block_loss_sum / static_cast<double>(M);
        valid_loss = result.curve.back().step == step ? result.curve.back().valid_loss : task.validation_loss(live.params);
        result.boundary_valid_losses.push_back(valid_loss);
        potential.observe(valid_loss);
    }
    result.final_train_loss = train_loss;
    result.final_valid_loss = valid_loss;
    result.inner_steps_run = step;
    return result;
}

double assign_rewards(EpisodeResult& result, const RewardContext& ctx) {
    std::vector<std::optional<double>> intermediate(result.boundary_valid_losses.begin(),
                                                    result.boundary_valid_losses.end());
    const auto rewards =
        reward::shaped_rewards(intermediate, result.final_valid_loss, ctx.fit, ctx.baseline, ctx.config);
    if (rewards.size() != result.trajectory.steps.size())
        throw std::logic_error("assign_rewards: trajectory and reward lengths differ");
    for (std::size_t k = 0; k < rewards.size(); ++k) result.trajectory.steps[k].reward = rewards[k];
    return reward::reward_from_loss(ctx.fit, ctx.baseline, result.final_valid_loss, ctx.config).value;
}

ScheduleFile export_schedule(const EpisodeResult& result, std::uint64_t policy_hash, std::uint64_t task_seed) {
    ScheduleFile s;
    s.policy_hash = policy_hash;
    s.task_seed = task_seed;
    for (const auto& o : result.outer) s.records.push_back({o.progress, o.hypers, o.restart});
    return s;
}

EpisodeResult replay_schedule(const ScheduleFile& schedule, const EpisodeContext& context, bool same_task) {
    if (!same_task && std::any_of(schedule.records.begin(), schedule.records.end(),
                                  [](const ScheduleRecord& r) { return r.restart != 0; }))
        std::cerr << "warning: schedule restart events ignored on a task other than the source task\n";
    return run_episode(context, ScheduleDriver{&schedule, same_task});
}

namespace {

std::string shortest(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> hyper_cells(const optim::HyperParams& h) {
    return {shortest(h.learning_rate),
            shortest(h.one_minus_beta1),
            shortest(h.one_minus_beta2),
            shortest(h.epsilon),
            shortest(h.weight_decay),
            shortest(h.grad_clip_fraction),
            shortest(h.one_minus_beta_gradclip),
            std::string(optim::denominator_name(h.denominator_mode)),
            h.use_lamb_trust ? "1" : "0",
            shortest(h.lamb_min_trust),
            shortest(h.one_minus_beta_lamb)};
}

} // namespace

std::string curve_csv(const EpisodeResult& result) {
    std::string out = "step,progress,train_loss,valid_loss";
    for (const auto& c : schedule_hyper_columns()) out += "," + c;
    out += '\n';
    for (const auto& r : result.curve) {
        out += std::to_string(r.step) + ',' + shortest(r.progress) + ',' + shortest(r.train_loss) + ',' +
               shortest(r.valid_loss);
        for (const auto& cell : hyper_cells(r.hypers)) out += ',' + cell;
        out += '\n';
    }
    return out;
}

std::string curve_json(const EpisodeResult& result) {
    using nlohmann::json;
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    json rows = json::array();
    const auto& cols = schedule_hyper_columns();
    for (const auto& r : result.curve) {
        json row = {{"step", r.step}, {"progress", r.progress}, {"train_loss", num(r.train_loss)},
                    {"valid_loss", num(r.valid_loss)}};
        const auto cells = hyper_cells(r.hypers);
        for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i]] = cells[i];
        rows.push_back(std::move(row));
    }
    json j = {{"final_train_loss", num(result.final_train_loss)},
              {"final_valid_loss", num(result.final_valid_loss)},
              {"inner_steps", result.inner_steps_run},
              {"curve", rows}};
    return j.dump(1) + "\n";
}

} // namespace lhopt::harness
