#include "lhopt/harness/schedule_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lhopt::harness {

namespace {

using optim::DenominatorMode;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, std::size_t line, const std::string& field) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ScheduleParseError(line, field, "not a number: '" + tok + "'");
    if (!std::isfinite(v)) throw ScheduleParseError(line, field, "non-finite value");
    return v;
}

std::uint64_t parse_u64(const std::string& tok, std::size_t line, const std::string& field, int base = 10) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v, base);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ScheduleParseError(line, field, "not an unsigned integer: '" + tok + "'");
    return v;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

} // namespace

const std::vector<std::string>& schedule_hyper_columns() {
    static const std::vector<std::string> cols = {
        "learning_rate",  "one_minus_beta1",    "one_minus_beta2",         "epsilon",
        "weight_decay",   "grad_clip_fraction", "one_minus_beta_gradclip", "denominator",
        "use_lamb_trust", "lamb_min_trust",     "one_minus_beta_lamb",
    };
    return cols;
}

ScheduleParseError::ScheduleParseError(std::size_t line, const std::string& field, const std::string& message)
    : std::runtime_error("schedule line " + std::to_string(line) + ", field '" + field + "': " + message),
      line_(line), field_(field) {}

const ScheduleRecord& ScheduleFile::at(double progress) const {
    if (!(progress >= 0.0 && progress <= 1.0)) throw std::domain_error("schedule lookup: progress outside [0, 1]");
    if (records.empty()) throw std::domain_error("schedule lookup: no records");
    const ScheduleRecord* active = &records.front();
    for (const auto& r : records) {
        if (r.progress > progress) break;
        active = &r;
    }
    return *active;
}

void validate_schedule(const ScheduleFile& s, const actions::HyperBounds& bounds) {
    if (s.version != schedule_format_version)
        throw std::invalid_argument("schedule: unsupported version " + std::to_string(s.version));
    if (s.optimizer != schedule_optimizer_id) throw std::invalid_argument("schedule: unknown optimizer " + s.optimizer);
    if (s.records.empty()) throw std::invalid_argument("schedule: no records");
    if (s.records.front().progress != 0.0) throw std::invalid_argument("schedule: first record must be at progress 0");
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        if (!(r.progress >= 0.0 && r.progress < 1.0))
            throw std::invalid_argument("schedule: record " + std::to_string(i) + " progress outside [0, 1)");
        if (i > 0 && !(r.progress > s.records[i - 1].progress))
            throw std::invalid_argument("schedule: progress must strictly increase at record " + std::to_string(i));
        if (!bounds.contains(r.hypers))
            throw std::invalid_argument("schedule: record " + std::to_string(i) + " violates hyperparameter bounds");
        if (!(r.hypers.lamb_min_trust > 0.0 && std::isfinite(r.hypers.lamb_min_trust)))
            throw std::invalid_argument("schedule: record " + std::to_string(i) + " has invalid lamb_min_trust");
        if (r.restart < 0 || r.restart >= static_cast<int>(actions::restart_arity))
            throw std::invalid_argument("schedule: record " + std::to_string(i) + " restart index out of range");
    }
}

std::string serialize_schedule(const ScheduleFile& s) {
    std::ostringstream os;
    os << "# lhopt hyperparameter schedule; each record holds until the next record's progress\n";
    os << "version " << s.version << '\n';
    os << "optimizer " << s.optimizer << '\n';
    os << "policy_hash " << hex(s.policy_hash) << '\n';
    os << "task_seed " << s.task_seed << '\n';
    os << "columns progress";
    for (const auto& c : schedule_hyper_columns()) os << ' ' << c;
    os << " restart\n";
    for (const auto& r : s.records) {
        const auto& h = r.hypers;
        os << format_double(r.progress) << ' ' << format_double(h.learning_rate) << ' '
           << format_double(h.one_minus_beta1) << ' ' << format_double(h.one_minus_beta2) << ' '
           << format_double(h.epsilon) << ' ' << format_double(h.weight_decay) << ' '
           << format_double(h.grad_clip_fraction) << ' ' << format_double(h.one_minus_beta_gradclip) << ' '
           << optim::denominator_name(h.denominator_mode) << ' ' << (h.use_lamb_trust ? 1 : 0) << ' '
           << format_double(h.lamb_min_trust) << ' ' << format_double(h.one_minus_beta_lamb) << ' ' << r.restart
           << '\n';
    }
    return os.str();
}

ScheduleFile parse_schedule(const std::string& text, const actions::HyperBounds& bounds) {
    ScheduleFile s;
    s.version = 0;
    s.optimizer.clear();
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_columns = false, have_seed = false, have_hash = false;
    std::vector<std::string> expected_cols = {"progress"};
    for (const auto& c : schedule_hyper_columns()) expected_cols.push_back(c);
    expected_cols.push_back("restart");

    while (std::getline(is, line)) {
        ++lineno;
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0].starts_with('#')) continue;
        if (!have_columns) {
            const std::string& key = tok[0];
            if (key == "columns") {
                if (s.version == 0) throw ScheduleParseError(lineno, "version", "missing before columns");
                if (s.optimizer.empty()) throw ScheduleParseError(lineno, "optimizer", "missing before columns");
                const std::vector<std::string> cols(tok.begin() + 1, tok.end());
                if (cols != expected_cols)
                    throw ScheduleParseError(lineno, "columns", "unexpected column list");
                have_columns = true;
                continue;
            }
            if (tok.size() != 2) throw ScheduleParseError(lineno, key, "expected 'key value'");
            if (key == "version") {
                s.version = static_cast<int>(parse_u64(tok[1], lineno, key));
                if (s.version != schedule_format_version)
                    throw ScheduleParseError(lineno, key, "unsupported version " + tok[1]);
            } else if (key == "optimizer") {
                if (tok[1] != schedule_optimizer_id) throw ScheduleParseError(lineno, key, "unknown optimizer " + tok[1]);
                s.optimizer = tok[1];
            } else if (key == "policy_hash") {
                s.policy_hash = parse_u64(tok[1], lineno, key, 16);
                have_hash = true;
            } else if (key == "task_seed") {
                s.task_seed = parse_u64(tok[1], lineno, key);
                have_seed = true;
            } else {
                throw ScheduleParseError(lineno, key, "unknown header field");
            }
            continue;
        }
        if (tok.size() != expected_cols.size())
            throw ScheduleParseError(lineno, tok.size() < expected_cols.size() ? expected_cols[tok.size()] : "restart",
                                     "expected " + std::to_string(expected_cols.size()) + " fields, found " +
                                         std::to_string(tok.size()));
        ScheduleRecord r;
        auto& h = r.hypers;
        std::size_t i = 0;
        auto next = [&](double& dst) {
            dst = parse_double(tok[i], lineno, expected_cols[i]);
            ++i;
        };
        next(r.progress);
        next(h.learning_rate);
        next(h.one_minus_beta1);
        next(h.one_minus_beta2);
        next(h.epsilon);
        next(h.weight_decay);
        next(h.grad_clip_fraction);
        next(h.one_minus_beta_gradclip);
        if (tok[i] == optim::denominator_name(DenominatorMode::adam)) h.denominator_mode = DenominatorMode::adam;
        else if (tok[i] == optim::denominator_name(DenominatorMode::adamax)) h.denominator_mode = DenominatorMode::adamax;
        else throw ScheduleParseError(lineno, expected_cols[i], "unknown denominator '" + tok[i] + "'");
        ++i;
        if (tok[i] != "0" && tok[i] != "1") throw ScheduleParseError(lineno, expected_cols[i], "expected 0 or 1");
        h.use_lamb_trust = tok[i] == "1";
        ++i;
        next(h.lamb_min_trust);
        next(h.one_minus_beta_lamb);
        r.restart = static_cast<int>(parse_u64(tok[i], lineno, expected_cols[i]));
        s.records.push_back(r);
    }
    if (s.version == 0) throw ScheduleParseError(lineno, "version", "missing header field");
    if (!have_hash) throw ScheduleParseError(lineno, "policy_hash", "missing header field");
    if (!have_seed) throw ScheduleParseError(lineno, "task_seed", "missing header field");
    if (!have_columns) throw ScheduleParseError(lineno, "columns", "missing header field");
    validate_schedule(s, bounds);
    return s;
}

void write_schedule(const ScheduleFile& schedule, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << serialize_schedule(schedule);
}

ScheduleFile read_schedule(const std::filesystem::path& path, const actions::HyperBounds& bounds) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_schedule(text.str(), bounds);
}

} // namespace lhopt::harness
