#include "lhopt/harness/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lhopt/harness/worker_pool.hpp"

namespace lhopt::harness {

namespace {

constexpr std::uint64_t eval_task_stream = 0x6576616c2d746173ULL;
constexpr double inf = std::numeric_limits<double>::infinity();

double finite_or_inf(double x) { return std::isfinite(x) ? x : inf; }

double best_of(const std::vector<double>& losses) {
    double best = inf;
    for (double l : losses) best = std::min(best, finite_or_inf(l));
    return best;
}

bool counts(double method_loss, const std::vector<double>& baselines) {
    return std::isfinite(method_loss) && method_loss <= best_of(baselines);
}

EpisodeContext eval_context(const EvalTask& t, const actions::ActionSpace& space, const actions::HyperBounds& bounds) {
    EpisodeContext ctx;
    ctx.task = t.task.get();
    ctx.config = t.episode;
    ctx.initial_hypers = optim::initial_hyper_params();
    ctx.space = space;
    ctx.bounds = bounds;
    ctx.task_encoding = t.task_encoding;
    ctx.initial_noise = actions::InitialNoise{}.encode();
    return ctx;
}

} // namespace

std::vector<EvalTask> sample_eval_tasks(const tasks::TaskDistribution& dist, std::size_t count, std::uint64_t seed,
                                        std::size_t cadence) {
    std::vector<EvalTask> out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto s = dist.sample(derive_seed(seed, eval_task_stream, i));
        EvalTask t;
        t.task = s.task;
        t.family = tasks::family_name(s.choices.family);
        t.seed = s.seed;
        t.episode.outer_steps = s.outer_steps();
        t.episode.inner_per_outer = s.inner_per_outer();
        t.episode.cadence = cadence;
        t.task_encoding = s.encoding;
        out.push_back(std::move(t));
    }
    return out;
}

optim::AdamWHypers baseline_adamw_hypers() {
    return {.learning_rate = 1e-3, .beta1 = 0.9, .beta2 = 0.999, .epsilon = 1e-8, .weight_decay = 1e-2};
}

double run_adamw_baseline(const tasks::InnerTask& task, const optim::BaselineSpec& spec, std::size_t steps) {
    try {
        TensorList params = task.initial_params();
        optim::AdamWState state(params);
        optim::AdamWHypers h = baseline_adamw_hypers();
        for (std::size_t s = 0; s < steps; ++s) {
            const auto ts = task.train_step(params, s);
            h.learning_rate =
                optim::schedule_value(spec.schedule, spec.base_lr, static_cast<double>(s) / static_cast<double>(steps));
            optim::adamw_step(params, ts.grads, h, state);
        }
        return finite_or_inf(task.validation_loss(params));
    } catch (const std::exception&) {
        return inf;
    }
}

std::string baseline_name(const optim::BaselineSpec& spec) {
    std::ostringstream os;
    os << "adamw_lr" << spec.base_lr << "_" << optim::schedule_name(spec.schedule);
    return os.str();
}

EvalReport aggregate_speedup(std::vector<TaskEvalRecord> records, std::vector<std::string> baseline_names) {
    if (records.empty()) throw std::invalid_argument("speedup evaluation: empty task set");
    std::sort(records.begin(), records.end(), [](const TaskEvalRecord& a, const TaskEvalRecord& b) {
        return std::tie(a.family, a.seed) < std::tie(b.family, b.seed);
    });
    EvalReport report;
    report.baseline_names = std::move(baseline_names);
    std::map<std::string, std::array<std::size_t, 3>> fam;
    std::size_t wins2 = 0, wins1 = 0;
    for (const auto& r : records) {
        const bool c2 = counts(r.method_loss, r.baseline_2x);
        const bool c1 = counts(r.method_loss, r.baseline_1x);
        wins2 += c2;
        wins1 += c1;
        auto& f = fam[r.family];
        ++f[0];
        f[1] += c2;
        f[2] += c1;
    }
    const auto n = static_cast<double>(records.size());
    report.fraction_2x = static_cast<double>(wins2) / n;
    report.fraction_1x = static_cast<double>(wins1) / n;
    for (const auto& [name, f] : fam)
        report.families.push_back({name, f[0], static_cast<double>(f[1]) / static_cast<double>(f[0]),
                                   static_cast<double>(f[2]) / static_cast<double>(f[0])});
    report.tasks = std::move(records);
    return report;
}

EvalReport evaluate_speedup_fraction(const MethodRunner& method, const std::vector<EvalTask>& tasks,
                                     const std::vector<optim::BaselineSpec>& grid, bool include_1x) {
    if (tasks.empty()) throw std::invalid_argument("speedup evaluation: empty task set");
    if (grid.empty()) throw std::invalid_argument("speedup evaluation: empty baseline grid");
    const std::size_t nb = grid.size();
    std::vector<TaskEvalRecord> records(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        records[i].family = tasks[i].family;
        records[i].seed = tasks[i].seed;
        records[i].method_steps = tasks[i].episode.total_inner_steps();
        records[i].baseline_2x.assign(nb, inf);
        if (include_1x) records[i].baseline_1x.assign(nb, inf);
    }
    const std::size_t per_task = 1 + nb * (include_1x ? 2 : 1);
    parallel_for(tasks.size() * per_task, [&](std::size_t job) {
        const std::size_t i = job / per_task, j = job % per_task;
        const auto& t = tasks[i];
        const std::size_t steps = t.episode.total_inner_steps();
        if (j == 0) {
            double loss = inf;
            try {
                loss = method(t);
            } catch (const std::exception&) {
            }
            records[i].method_loss = loss;
        } else if (j <= nb) {
            records[i].baseline_2x[j - 1] = run_adamw_baseline(*t.task, grid[j - 1], 2 * steps);
        } else {
            records[i].baseline_1x[j - 1 - nb] = run_adamw_baseline(*t.task, grid[j - 1 - nb], steps);
        }
    });
    std::vector<std::string> names;
    for (const auto& spec : grid) names.push_back(baseline_name(spec));
    return aggregate_speedup(std::move(records), std::move(names));
}

MethodRunner controller_runner(const policy::Controller& controller, const actions::ActionSpace& space,
                               const actions::HyperBounds& bounds, std::optional<std::uint64_t> sample_seed) {
    return [&controller, space, bounds, sample_seed](const EvalTask& t) {
        const EpisodeContext ctx = eval_context(t, space, bounds);
        PolicyDriver driver{&controller, sample_seed ? derive_seed(*sample_seed, t.seed) : 0, !sample_seed, nullptr};
        return run_episode(ctx, driver).final_valid_loss;
    };
}

StaticComparison compare_with_static(const MethodRunner& method, const std::vector<EvalTask>& tasks,
                                     const actions::ActionSpace& space, const actions::HyperBounds& bounds) {
    StaticComparison out;
    out.tasks = tasks.size();
    out.controller_losses.assign(tasks.size(), inf);
    out.static_losses.assign(tasks.size(), inf);
    parallel_for(2 * tasks.size(), [&](std::size_t job) {
        const std::size_t i = job / 2;
        if (job % 2 == 0) {
            out.controller_losses[i] = method(tasks[i]);
        } else {
            out.static_losses[i] = run_episode(eval_context(tasks[i], space, bounds), StaticDriver{}).final_valid_loss;
        }
    });
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (std::isfinite(out.controller_losses[i]) &&
            out.controller_losses[i] < finite_or_inf(out.static_losses[i]))
            ++out.wins;
    out.win_fraction = tasks.empty() ? 0.0 : static_cast<double>(out.wins) / static_cast<double>(tasks.size());
    return out;
}

std::string eval_report_json(const EvalReport& r) {
    using nlohmann::json;
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    json j;
    j["fraction_2x"] = r.fraction_2x;
    j["fraction_1x"] = r.fraction_1x;
    j["baselines"] = r.baseline_names;
    j["families"] = json::array();
    for (const auto& f : r.families)
        j["families"].push_back(
            {{"family", f.family}, {"tasks", f.tasks}, {"fraction_2x", f.fraction_2x}, {"fraction_1x", f.fraction_1x}});
    j["tasks"] = json::array();
    for (const auto& t : r.tasks) {
        json b2 = json::array(), b1 = json::array();
        for (double x : t.baseline_2x) b2.push_back(num(x));
        for (double x : t.baseline_1x) b1.push_back(num(x));
        j["tasks"].push_back({{"family", t.family},
                              {"seed", t.seed},
                              {"method_steps", t.method_steps},
                              {"method_loss", num(t.method_loss)},
                              {"baseline_2x", b2},
                              {"baseline_1x", b1}});
    }
    return j.dump(1);
}

std::string eval_report_csv(const EvalReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "family,seed,method_loss,best_2x,best_1x,counted_2x,counted_1x\n";
    for (const auto& t : r.tasks)
        os << t.family << ',' << t.seed << ',' << t.method_loss << ',' << best_of(t.baseline_2x) << ','
           << best_of(t.baseline_1x) << ',' << counts(t.method_loss, t.baseline_2x) << ','
           << counts(t.method_loss, t.baseline_1x) << '\n';
    return os.str();
}

} // namespace lhopt::harness
