// lhopt: train, evaluate and run learned hyperparameter controllers.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lhopt/harness/config.hpp"
#include "lhopt/harness/episode.hpp"
#include "lhopt/harness/evaluation.hpp"
#include "lhopt/harness/schedule_file.hpp"
#include "lhopt/harness/training.hpp"
#include "lhopt/optim/schedules.hpp"
#include "lhopt/policy/checkpoint_io.hpp"

namespace fs = std::filesystem;
using namespace lhopt;

namespace {

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<int> tasks;
    std::optional<int> outer_steps;
    std::string policy;
    std::string schedule;
    std::string format = "csv";
};

/// Failure that should reach the user as a JSON record with this kind tag.
struct CliError : std::runtime_error {
    CliError(std::string kind, const std::string& msg) : std::runtime_error(msg), kind(std::move(kind)) {}
    std::string kind;
};

harness::TrainingConfig load_config(const Options& o) {
    harness::TrainingConfig c = o.config.empty() ? harness::TrainingConfig{} : harness::load_training_config(o.config);
    c.seed = o.seed;
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError("io", "cannot write " + path.string());
    out << text;
}

/// Writes to <out>/<name> or, without --out, to stdout.
void emit(const Options& o, const std::string& name, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_text(fs::path(o.out) / name, text);
    }
}

struct TaskRun {
    tasks::SampledTask sampled;
    harness::EpisodeContext ctx;
};

/// The task drawn from the configured distribution by `seed`, run from the
/// default initial hyperparameters.
TaskRun make_task(const harness::TrainingConfig& c, const Options& o) {
    const tasks::TaskDistribution dist(c.distribution);
    TaskRun t{dist.sample(o.seed), {}};
    t.ctx.task = t.sampled.task.get();
    t.ctx.config.outer_steps = o.outer_steps.value_or(t.sampled.outer_steps());
    t.ctx.config.inner_per_outer = t.sampled.inner_per_outer();
    t.ctx.config.cadence = c.cadence;
    t.ctx.config.validate();
    t.ctx.initial_hypers = optim::initial_hyper_params();
    t.ctx.space = c.space();
    t.ctx.bounds = c.bounds;
    t.ctx.task_encoding = t.sampled.encoding;
    t.ctx.initial_noise = actions::InitialNoise{}.encode();
    return t;
}

std::optional<policy::Controller> maybe_policy(const harness::TrainingConfig& c, const Options& o) {
    if (o.policy.empty()) return std::nullopt;
    const tasks::TaskDistribution dist(c.distribution);
    const auto layout =
        harness::make_layout(c.space(), dist.encoding_width(), actions::InitialNoise{}.encode().size());
    return policy::load_controller(o.policy, &layout);
}

std::string curve_text(const Options& o, const harness::EpisodeResult& r) {
    return o.format == "json" ? harness::curve_json(r) : harness::curve_csv(r);
}

std::string curve_file(const Options& o) { return o.format == "json" ? "curve.json" : "curve.csv"; }

int cmd_train(const Options& o) {
    auto c = load_config(o);
    if (o.tasks) c.iterations = *o.tasks;
    if (o.outer_steps) c.distribution.episode.outer_min = c.distribution.episode.outer_max = *o.outer_steps;
    const fs::path dir = o.out.empty() ? fs::path("lhopt_train") : fs::path(o.out);
    auto result = harness::train_outer(
        c,
        [](const harness::TrainingLogEntry& e) {
            std::cerr << "iteration " << e.iteration << " reward " << e.mean_terminal_reward << '\n';
        },
        [](const harness::HeldoutEval& e) {
            std::cerr << "held-out after " << e.iteration << " iterations: mean reward " << e.mean << '\n';
        });
    fs::create_directories(dir);
    policy::save_controller(result.controller, dir / "controller.json");
    write_text(dir / "training_log.csv", harness::training_log_csv(result));
    nlohmann::json summary = {{"iterations", c.iterations},
                              {"baseline_runs", result.baseline_runs},
                              {"policy_runs", result.policy_runs},
                              {"max_reuse_observed", result.max_reuse_observed}};
    nlohmann::json heldout = nlohmann::json::array();
    for (const auto& h : result.heldout)
        heldout.push_back({{"iteration", h.iteration}, {"mean", h.mean}, {"rewards", h.rewards}});
    summary["heldout"] = heldout;
    if (result.heldout.size() >= 2) {
        const auto q = harness::quintile_test(result.heldout);
        summary["quintile_test"] = {{"first_mean", q.first_mean}, {"last_mean", q.last_mean},
                                    {"t", q.t_statistic},         {"p_value", q.p_value}};
    }
    summary["controller_hash"] = policy::controller_hash(result.controller);
    write_text(dir / "summary.json", summary.dump(1) + "\n");
    std::cout << (dir / "controller.json").string() << '\n';
    return 0;
}

int cmd_eval(const Options& o) {
    const auto c = load_config(o);
    const int n = o.tasks.value_or(20);
    if (n <= 0) throw CliError("invalid_argument", "eval: --tasks must be positive, got " + std::to_string(n));
    const tasks::TaskDistribution dist(c.distribution);
    auto tasks = harness::sample_eval_tasks(dist, static_cast<std::size_t>(n), o.seed, c.cadence);
    if (o.outer_steps)
        for (auto& t : tasks) t.episode.outer_steps = *o.outer_steps;
    const auto controller = maybe_policy(c, o);
    const auto space = c.space();
    harness::MethodRunner method;
    if (controller) {
        method = harness::controller_runner(*controller, space, c.bounds);
    } else {
        method = [&](const harness::EvalTask& t) {
            harness::EpisodeContext ctx;
            ctx.task = t.task.get();
            ctx.config = t.episode;
            ctx.space = space;
            ctx.bounds = c.bounds;
            return harness::run_episode(ctx, harness::StaticDriver{}).final_valid_loss;
        };
    }
    const auto report = harness::evaluate_speedup_fraction(method, tasks, optim::baseline_grid());
    if (o.format == "json") {
        emit(o, "eval_report.json", harness::eval_report_json(report) + "\n");
    } else {
        emit(o, "eval_report.csv", harness::eval_report_csv(report));
    }
    std::cerr << "fraction_2x " << report.fraction_2x << " fraction_1x " << report.fraction_1x << '\n';
    return 0;
}

int cmd_run(const Options& o) {
    const auto c = load_config(o);
    const auto t = make_task(c, o);
    const auto controller = maybe_policy(c, o);
    const auto result = controller
                            ? harness::run_episode(t.ctx, harness::PolicyDriver{&*controller, 0, true, nullptr})
                            : harness::run_episode(t.ctx, harness::StaticDriver{});
    emit(o, curve_file(o), curve_text(o, result));
    return 0;
}

int cmd_export(const Options& o) {
    const auto c = load_config(o);
    const auto controller = maybe_policy(c, o);
    if (!controller) throw CliError("invalid_argument", "export-schedule: --policy is required");
    const auto t = make_task(c, o);
    const auto result = harness::run_episode(t.ctx, harness::PolicyDriver{&*controller, 0, true, nullptr});
    const auto schedule = harness::export_schedule(result, policy::controller_hash(*controller), o.seed);
    const std::string text = harness::serialize_schedule(schedule);
    if (!o.schedule.empty()) {
        write_text(o.schedule, text);
    } else {
        emit(o, "schedule.txt", text);
    }
    if (!o.out.empty()) write_text(fs::path(o.out) / curve_file(o), curve_text(o, result));
    return 0;
}

int cmd_replay(const Options& o) {
    if (o.schedule.empty()) throw CliError("invalid_argument", "replay: --schedule is required");
    const auto c = load_config(o);
    const auto schedule = harness::read_schedule(o.schedule, c.bounds);
    const auto t = make_task(c, o);
    const auto result = harness::replay_schedule(schedule, t.ctx, schedule.task_seed == o.seed);
    emit(o, curve_file(o), curve_text(o, result));
    return 0;
}

void error_record(const std::string& kind, const std::string& message, const std::string& command) {
    nlohmann::json j = {{"error", kind}, {"message", message}, {"command", command}};
    std::cerr << j.dump() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned hyperparameter optimizer lab"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON training configuration");
        sub->add_option("--seed", o.seed, "Seed (task seed for run/export-schedule/replay)");
        sub->add_option("--out", o.out, "Output directory (default: stdout where possible)");
        sub->add_option("--tasks", o.tasks, "Training iterations (train) or evaluation tasks (eval)");
        sub->add_option("--outer-steps", o.outer_steps, "Override the number of outer steps")->check(CLI::Range(2, 128));
        sub->add_option("--policy", o.policy, "Controller checkpoint");
        sub->add_option("--schedule", o.schedule, "Schedule file to write (export-schedule) or read (replay)");
        sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    };
    auto* train = app.add_subcommand("train", "Train a controller with PPO");
    auto* eval = app.add_subcommand("eval", "Speedup-fraction evaluation against the AdamW grid");
    auto* run = app.add_subcommand("run", "Run one episode and write its learning curve");
    auto* exp = app.add_subcommand("export-schedule", "Run a controller and export its hyperparameter schedule");
    auto* replay = app.add_subcommand("replay", "Replay a schedule file on a task");
    for (auto* sub : {train, eval, run, exp, replay}) common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "train") return cmd_train(o);
        if (command == "eval") return cmd_eval(o);
        if (command == "run") return cmd_run(o);
        if (command == "export-schedule") return cmd_export(o);
        return cmd_replay(o);
    } catch (const CliError& e) {
        error_record(e.kind, e.what(), command);
        return 1;
    } catch (const harness::ConfigError& e) {
        error_record("config", e.what(), command);
        return 1;
    } catch (const harness::ScheduleParseError& e) {
        error_record("schedule_parse", e.what(), command);
        return 1;
    } catch (const std::invalid_argument& e) {
        error_record("invalid_argument", e.what(), command);
        return 1;
    } catch (const std::exception& e) {
        error_record("runtime", e.what(), command);
        return 1;
    }
}
