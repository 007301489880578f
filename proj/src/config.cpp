#include "ddsat/config.hpp"

#include <fstream>
#include <sstream>

namespace ddsat {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + s);
    }
}

int to_int(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + s);
    }
}

std::vector<double> to_doubles(const std::string& s, const std::string& key) {
    std::stringstream ss(s);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(to_double(tok, key));
    if (out.empty()) throw std::invalid_argument("config: key '" + key + "' has no values");
    return out;
}

} // namespace

Mat parse_inline_matrix(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    std::string row_text;
    while (std::getline(ss, row_text, ';')) {
        std::stringstream rs(row_text);
        std::vector<double> row;
        double v;
        while (rs >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("config: empty matrix literal");
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != cols)
            throw std::invalid_argument("config: matrix literal has ragged rows: " + text);
    Mat m(static_cast<int>(rows.size()), static_cast<int>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return m;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        const std::size_t dots = tok.find("..");
        try {
            if (dots == std::string::npos) {
                out.push_back(std::stoull(tok));
            } else {
                const std::uint64_t a = std::stoull(tok.substr(0, dots));
                const std::uint64_t b = std::stoull(tok.substr(dots + 2));
                if (b < a) throw std::invalid_argument("");
                for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
            }
        } catch (...) {
            throw std::invalid_argument("config: bad seed token: " + tok);
        }
    }
    if (out.empty()) throw std::invalid_argument("config: empty seed list");
    return out;
}

ExperimentConfig benchmark_config() {
    ExperimentConfig cfg;
    cfg.system = benchmark_system();
    cfg.excitation_gain = Mat::Identity(3, 3);
    cfg.excitation_low = -1.0;
    cfg.excitation_high = 1.0;
    cfg.T = 6000;
    cfg.noise_std = 0.1;
    cfg.seeds = parse_seed_list("1..20");
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg = benchmark_config();

    // Explicit system pieces override the preset once all are present.
    std::optional<Mat> A, B, ubar, C, Du, Dw;
    bool preset_requested = true;
    bool excitation_gain_set = false, excitation_open_loop = false;

    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section header at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            if (section != "system" && section != "excitation" && section != "data" &&
                section != "synthesis" && section != "compare" && section != "output" &&
                section != "solver")
                throw std::invalid_argument("config: unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("config: empty key or value at line " +
                                        std::to_string(lineno));

        if (section == "system") {
            if (key == "preset") {
                if (val != "benchmark")
                    throw std::invalid_argument("config: unknown system preset: " + val);
                preset_requested = true;
            } else if (key == "A") A = parse_inline_matrix(val);
            else if (key == "B") B = parse_inline_matrix(val);
            else if (key == "ubar") ubar = parse_inline_matrix(val);
            else if (key == "C") C = parse_inline_matrix(val);
            else if (key == "D_u") Du = parse_inline_matrix(val);
            else if (key == "D_w") Dw = parse_inline_matrix(val);
            else throw std::invalid_argument("config: unknown key '" + key + "' in [system]");
        } else if (section == "excitation") {
            if (key == "low") cfg.excitation_low = to_double(val, key);
            else if (key == "high") cfg.excitation_high = to_double(val, key);
            else if (key == "gain") {
                cfg.excitation_gain = parse_inline_matrix(val);
                excitation_gain_set = true;
            } else if (key == "open_loop") {
                if (val != "true" && val != "false")
                    throw std::invalid_argument("config: open_loop must be true or false");
                excitation_open_loop = val == "true";
            } else throw std::invalid_argument("config: unknown key '" + key + "' in [excitation]");
        } else if (section == "data") {
            if (key == "T") cfg.T = to_int(val, key);
            else if (key == "noise_std") cfg.noise_std = to_double(val, key);
            else if (key == "seeds") cfg.seeds = parse_seed_list(val);
            else throw std::invalid_argument("config: unknown key '" + key + "' in [data]");
        } else if (section == "synthesis") {
            if (key == "problem") {
                if (val == "boa") cfg.problem = SynthProblem::Boa;
                else if (val == "reachable") cfg.problem = SynthProblem::Reachable;
                else if (val == "l2gain") cfg.problem = SynthProblem::L2Gain;
                else throw std::invalid_argument("config: unknown problem: " + val);
            } else if (key == "mode") cfg.synth.mode = synth_mode_from_string(val);
            else if (key == "eta") cfg.synth.eta = to_double(val, key);
            else if (key == "s") cfg.synth.s = to_double(val, key);
            else if (key == "kappa2") cfg.synth.kappa2 = to_double(val, key);
            else if (key == "epsilon") cfg.synth.epsilon = to_double(val, key);
            else throw std::invalid_argument("config: unknown key '" + key + "' in [synthesis]");
        } else if (section == "compare") {
            if (key == "noise_grid") cfg.noise_grid = to_doubles(val, key);
            else if (key == "T_grid") {
                for (double v : to_doubles(val, key))
                    cfg.horizon_grid.push_back(static_cast<int>(v));
            } else throw std::invalid_argument("config: unknown key '" + key + "' in [compare]");
        } else if (section == "output") {
            if (key == "dir") cfg.out_dir = val;
            else if (key == "jobs") cfg.jobs = to_int(val, key);
            else throw std::invalid_argument("config: unknown key '" + key + "' in [output]");
        } else if (section == "solver") {
            if (key == "tolerance") cfg.synth.solver.tolerance = to_double(val, key);
            else if (key == "max_iterations") cfg.synth.solver.max_iterations = to_int(val, key);
            else throw std::invalid_argument("config: unknown key '" + key + "' in [solver]");
        } else {
            throw std::invalid_argument("config: key '" + key + "' outside any section");
        }
    }

    const bool explicit_system = A || B || ubar || C || Du || Dw;
    if (explicit_system) {
        if (!A || !B || !ubar)
            throw std::invalid_argument("config: explicit systems need A, B, and ubar");
        if ((C || Du || Dw) && !(C && Du && Dw))
            throw std::invalid_argument("config: a performance channel needs C, D_u, and D_w");
        Vec ub(ubar->size());
        for (int i = 0; i < ub.size(); ++i) ub(i) = (*ubar)(i / ubar->cols(), i % ubar->cols());
        LinearSaturatedSystem sys{*A, *B, SaturationBounds(std::move(ub)), std::nullopt};
        if (C) sys.channel = PerformanceChannel{*C, *Du, *Dw};
        sys.validate();
        cfg.system = sys;
        if (!excitation_gain_set) cfg.excitation_gain.reset();
        (void)preset_requested;
    }
    if (excitation_open_loop) cfg.excitation_gain.reset();
    else if (excitation_gain_set) {
        if (cfg.excitation_gain->rows() != cfg.system.nu() ||
            cfg.excitation_gain->cols() != cfg.system.nx())
            throw std::invalid_argument("config: excitation gain must be n_u x n_x");
    }

    if (cfg.T < 1) throw std::invalid_argument("config: T must be >= 1");
    if (cfg.noise_std < 0.0) throw std::invalid_argument("config: noise_std must be >= 0");
    if (!(cfg.excitation_high > cfg.excitation_low))
        throw std::invalid_argument("config: excitation range is empty");
    if (cfg.jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
    if (!(cfg.synth.eta > 0.0 && cfg.synth.eta <= 1.0))
        throw std::invalid_argument("config: eta must lie in (0, 1]");
    if (!(cfg.synth.s > 0.0)) throw std::invalid_argument("config: s must be positive");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace ddsat
