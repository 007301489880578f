#include "ddsat/cli.hpp"
#include "ddsat/sim.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

namespace fs = std::filesystem;

namespace ddsat {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::uint64_t protocol_seed(const ExperimentConfig& cfg) {
    return cfg.seeds.empty() ? 1 : cfg.seeds.front();
}

// Steps until |x| < 1e-2 stays below for the first time; -1 if never within cap.
int convergence_steps(const LinearSaturatedSystem& sys, const Mat& K, const Vec& x0, int cap) {
    Trajectory traj = simulate(sys, K, x0, std::nullopt, cap);
    for (std::size_t k = 0; k < traj.x.size(); ++k)
        if (traj.x[k].norm() < 1e-2) return static_cast<int>(k);
    return -1;
}

} // namespace

std::string dataset_path(const ExperimentConfig& cfg, std::uint64_t seed) {
    return cfg.out_dir + "/dataset_seed" + std::to_string(seed) + ".csv";
}

std::string result_path(const ExperimentConfig& cfg, std::uint64_t seed) {
    return cfg.out_dir + "/result_" + to_string(cfg.problem) + "_" + to_string(cfg.synth.mode) +
           "_seed" + std::to_string(seed) + ".txt";
}

Dataset generate_protocol_dataset(const ExperimentConfig& cfg, std::uint64_t seed,
                                  double noise_std, int T) {
    const int dim = cfg.excitation_gain ? cfg.system.nx() : cfg.system.nu();
    SignalRecord ref = uniform_reference(dim, T, cfg.excitation_low, cfg.excitation_high,
                                         Rng::derive_seed(seed, 2));
    return generate_dataset(cfg.system, cfg.excitation_gain, ref, noise_std, seed, T);
}

DataProducts products_for(const Dataset& ds) {
    return compute_products(ds, build_instrument(ds, true));
}

SynthesisResult run_design(const ExperimentConfig& cfg, const DataProducts& products) {
    SynthesisOptions o = cfg.synth;
    if (o.mode == SynthMode::Oracle && !o.model)
        o.model = EstimatedModel{cfg.system.A, cfg.system.B};
    switch (cfg.problem) {
        case SynthProblem::Boa:
            return synth_boa(products, cfg.system.bounds, o);
        case SynthProblem::Reachable:
            return synth_reachable(products, cfg.system.bounds, o);
        case SynthProblem::L2Gain:
            if (!cfg.system.channel)
                throw std::invalid_argument("run_design: the gain problem needs a channel");
            return synth_l2gain(products, cfg.system.bounds, *cfg.system.channel, o);
    }
    throw std::logic_error("run_design: unreachable");
}

int cmd_generate(const ExperimentConfig& cfg) {
    const int tmin = Dataset::min_horizon(cfg.system.nx(), cfg.system.nu());
    if (cfg.T < tmin) {
        std::fprintf(stderr,
                     "generate: T=%d is below the informativity bound %d for this system\n",
                     cfg.T, tmin);
        return 1;
    }
    fs::create_directories(cfg.out_dir);

    struct Row {
        bool ok = false;
        double snr = 0.0, hits = 0.0;
        bool warn = false;
        std::string err;
    };
    const int n = static_cast<int>(cfg.seeds.size());
    std::vector<Row> rows(static_cast<std::size_t>(n));
    parallel_for(n, cfg.jobs, [&](int i) {
        Row& row = rows[static_cast<std::size_t>(i)];
        try {
            Dataset ds = generate_protocol_dataset(cfg, cfg.seeds[static_cast<std::size_t>(i)],
                                                   cfg.noise_std, cfg.T);
            write_dataset(ds, dataset_path(cfg, cfg.seeds[static_cast<std::size_t>(i)]));
            row.snr = ds.snr_db;
            row.hits = ds.saturation_hit_ratio(cfg.system.bounds);
            row.warn = ds.length_warning;
            row.ok = true;
        } catch (const std::exception& e) {
            row.err = e.what();
        }
    });

    std::ofstream out(cfg.out_dir + "/manifest.csv");
    out << "seed,snr_db,saturation_hit_ratio,length_warning,status\n";
    int failures = 0;
    for (int i = 0; i < n; ++i) {
        const Row& row = rows[static_cast<std::size_t>(i)];
        out << cfg.seeds[static_cast<std::size_t>(i)] << ',';
        if (row.ok) {
            out << fmt(row.snr) << ',' << fmt(row.hits) << ',' << (row.warn ? 1 : 0) << ",ok\n";
        } else {
            out << ",,," << "error: " << sanitize(row.err) << "\n";
            ++failures;
        }
    }
    std::printf("generate: %d/%d datasets written to %s\n", n - failures, n,
                cfg.out_dir.c_str());
    return failures == 0 ? 0 : 1;
}

int cmd_synth(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    struct Row {
        bool ok = false;
        SynthesisResult r;
        int steps = -1;
        std::string err;
    };
    const int n = static_cast<int>(cfg.seeds.size());
    std::vector<Row> rows(static_cast<std::size_t>(n));
    parallel_for(n, cfg.jobs, [&](int i) {
        Row& row = rows[static_cast<std::size_t>(i)];
        const std::uint64_t seed = cfg.seeds[static_cast<std::size_t>(i)];
        try {
            Dataset ds = read_dataset(dataset_path(cfg, seed));
            DataProducts p = products_for(ds);
            row.r = run_design(cfg, p);
            write_result(row.r, result_path(cfg, seed));
            if (cfg.problem == SynthProblem::Boa && row.r.usable())
                row.steps = convergence_steps(cfg.system, row.r.K,
                                              2.0 * Vec::Ones(cfg.system.nx()), 200);
            row.ok = true;
        } catch (const std::exception& e) {
            row.err = e.what();
        }
    });

    const std::string csv = cfg.out_dir + "/synth_" + to_string(cfg.problem) + "_" +
                            to_string(cfg.synth.mode) + ".csv";
    std::ofstream out(csv);
    out << "seed,status,objective,gamma,consistency,iterations,min_slack,max_equality,"
           "convergence_steps";
    const int nx = cfg.system.nx(), nu = cfg.system.nu();
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nx; ++j) out << ",K_" << i + 1 << "_" << j + 1;
    out << "\n";
    int failures = 0;
    for (int i = 0; i < n; ++i) {
        const Row& row = rows[static_cast<std::size_t>(i)];
        out << cfg.seeds[static_cast<std::size_t>(i)] << ',';
        if (!row.ok) {
            out << "error: " << sanitize(row.err) << "\n";
            ++failures;
            continue;
        }
        out << to_string(row.r.status) << ',' << fmt(row.r.objective) << ',';
        if (cfg.problem == SynthProblem::L2Gain) out << fmt(row.r.gamma());
        out << ',' << fmt(row.r.consistency) << ',' << row.r.iterations << ','
            << fmt(row.r.residuals.min_slack) << ',' << fmt(row.r.residuals.max_equality_residual)
            << ',';
        if (row.steps >= 0) out << row.steps;
        for (int a = 0; a < nu; ++a)
            for (int b = 0; b < nx; ++b) out << ',' << fmt(row.r.K(a, b));
        out << "\n";
        if (!row.r.usable()) ++failures;
    }
    std::printf("synth: %d/%d seeds usable, table in %s\n", n - failures, n, csv.c_str());
    return failures == 0 ? 0 : 1;
}

int cmd_compare(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const std::vector<double> sigmas =
        cfg.noise_grid.empty() ? std::vector<double>{cfg.noise_std} : cfg.noise_grid;
    const std::vector<int> horizons =
        cfg.horizon_grid.empty() ? std::vector<int>{cfg.T} : cfg.horizon_grid;

    struct Cell {
        double sigma = 0.0;
        int T = 0;
        std::uint64_t seed = 0;
        bool ok = false;
        double obj_oracle = 0.0, obj_direct = 0.0, obj_indirect = 0.0;
        std::string st_oracle, st_direct, st_indirect;
        double idx_direct = 0.0, idx_indirect = 0.0;
        std::string err;
    };
    std::vector<Cell> cells;
    for (double sg : sigmas)
        for (int T : horizons)
            for (std::uint64_t seed : cfg.seeds) {
                Cell c;
                c.sigma = sg;
                c.T = T;
                c.seed = seed;
                cells.push_back(std::move(c));
            }

    const EstimatedModel truth{cfg.system.A, cfg.system.B};
    parallel_for(static_cast<int>(cells.size()), cfg.jobs, [&](int i) {
        Cell& c = cells[static_cast<std::size_t>(i)];
        try {
            Dataset ds = generate_protocol_dataset(cfg, c.seed, c.sigma, c.T);
            DataProducts p = products_for(ds);

            ExperimentConfig local = cfg;
            local.synth.mode = SynthMode::Oracle;
            local.synth.model = truth;
            SynthesisResult oracle = run_design(local, p);
            c.obj_oracle = oracle.objective;
            c.st_oracle = to_string(oracle.status);

            local.synth.mode = SynthMode::Direct;
            local.synth.model.reset();
            SynthesisResult direct = run_design(local, p);
            c.obj_direct = direct.objective;
            c.st_direct = to_string(direct.status);
            c.idx_direct = performance_index(direct.objective, oracle.objective);

            local.synth.mode = SynthMode::Indirect;
            SynthesisResult indirect = run_design(local, p);
            c.obj_indirect = indirect.objective;
            c.st_indirect = to_string(indirect.status);
            c.idx_indirect = performance_index(indirect.objective, oracle.objective);
            c.ok = true;
        } catch (const std::exception& e) {
            c.err = e.what();
        }
    });

    const std::string csv = cfg.out_dir + "/compare_" + to_string(cfg.problem) + ".csv";
    std::ofstream out(csv);
    out << "sigma_e,T,seed,objective_oracle,status_oracle,objective_direct,status_direct,"
           "index_direct,objective_indirect,status_indirect,index_indirect\n";
    int failures = 0;
    for (const Cell& c : cells) {
        out << fmt(c.sigma) << ',' << c.T << ',' << c.seed << ',';
        if (!c.ok) {
            out << "error: " << sanitize(c.err) << "\n";
            ++failures;
            continue;
        }
        out << fmt(c.obj_oracle) << ',' << c.st_oracle << ',' << fmt(c.obj_direct) << ','
            << c.st_direct << ',' << fmt(c.idx_direct) << ',' << fmt(c.obj_indirect) << ','
            << c.st_indirect << ',' << fmt(c.idx_indirect) << "\n";
    }
    std::printf("compare: %zu/%zu cells completed, table in %s\n", cells.size() - failures,
                cells.size(), csv.c_str());
    return failures == 0 ? 0 : 1;
}

namespace {

int simulate_boa_result(const ExperimentConfig& cfg, const SynthesisResult& r) {
    const LinearSaturatedSystem& sys = cfg.system;
    const int nx = sys.nx();
    const Ellipsoid basin{r.Q, 1.0};
    Rng rng(Rng::derive_seed(protocol_seed(cfg), 7));
    const int runs = 100, T = 100;

    std::vector<Trajectory> trajs;
    int diverged = 0;
    for (int i = 0; i < runs; ++i) {
        Vec x0 = rng.uniform_vec(nx, -2.0, 2.0);
        try {
            trajs.push_back(simulate(sys, r.K, x0, std::nullopt, T));
        } catch (const std::runtime_error&) {
            ++diverged;
        }
    }

    // Fig-style bands for the first state and input across completed runs.
    std::ofstream bands(cfg.out_dir + "/simulate_boa_bands.csv");
    bands << "time,mean_x1,std_x1,mean_u1,std_u1\n";
    for (int k = 0; k < T; ++k) {
        double sx = 0, sx2 = 0, su = 0, su2 = 0;
        for (const Trajectory& t : trajs) {
            const double x1 = t.x[static_cast<std::size_t>(k)](0);
            const double u1 = t.u[static_cast<std::size_t>(k)](0);
            sx += x1;
            sx2 += x1 * x1;
            su += u1;
            su2 += u1 * u1;
        }
        const double m = static_cast<double>(trajs.size());
        const double mx = sx / m, mu = su / m;
        bands << k << ',' << fmt(mx) << ',' << fmt(std::sqrt(std::max(0.0, sx2 / m - mx * mx)))
              << ',' << fmt(mu) << ',' << fmt(std::sqrt(std::max(0.0, su2 / m - mu * mu)))
              << "\n";
    }

    int converged = 0, inside = 0, bound_holds = 0, steps_acc = 0, steps_n = 0;
    for (const Trajectory& t : trajs) {
        int first = -1;
        for (std::size_t k = 0; k < t.x.size() && k <= 60; ++k)
            if (t.x[k].norm() < 1e-2) {
                first = static_cast<int>(k);
                break;
            }
        if (first >= 0) {
            ++converged;
            steps_acc += first;
            ++steps_n;
        }
        if (ellipsoid_contains(basin, t.x.front())) {
            ++inside;
            if (verify_convergence_bound(t, r.Q, r.eta).holds) ++bound_holds;
        }
    }

    std::ofstream rep(cfg.out_dir + "/simulate_boa_report.txt");
    rep << "runs = " << runs << "\n";
    rep << "diverged = " << diverged << "\n";
    rep << "converged_within_60 = " << converged << "\n";
    rep << "mean_steps_to_converge = " << (steps_n ? fmt(double(steps_acc) / steps_n) : "n/a")
        << "\n";
    rep << "started_inside_certified_set = " << inside << "\n";
    rep << "decay_bound_holds = " << bound_holds << "\n";
    const bool pass = converged >= 95 && bound_holds == inside;
    rep << "pass = " << (pass ? "yes" : "no") << "\n";
    std::printf("simulate: %d/%d runs converged, %d/%d certified runs meet the decay bound\n",
                converged, runs, bound_holds, inside);
    return pass ? 0 : 1;
}

int simulate_reachable_result(const ExperimentConfig& cfg, const SynthesisResult& r) {
    const LinearSaturatedSystem& sys = cfg.system;
    const Ellipsoid outer{r.Q, r.s};
    auto suite = make_disturbance_suite(sys.nx(), 150, r.s, 50, protocol_seed(cfg));
    ReachableReport rep = verify_reachable(sys, r.K, outer, suite);
    Trajectory sample = simulate(sys, r.K, Vec::Zero(sys.nx()), suite.front(),
                                 suite.front().horizon + 1);
    write_trajectory(sample, cfg.out_dir + "/simulate_reachable_traj.csv");

    std::ofstream out(cfg.out_dir + "/simulate_reachable_report.txt");
    out << "runs = " << rep.runs << "\n";
    out << "worst_level = " << fmt(rep.worst_level) << "\n";
    out << "worst_margin = " << fmt(rep.worst_margin) << "\n";
    out << "inside = " << (rep.inside ? "yes" : "no") << "\n";
    std::printf("simulate: worst reachable level %.6g against s^2 = %.6g over %d runs\n",
                rep.worst_level, r.s * r.s, rep.runs);
    return rep.worst_margin >= -1e-6 ? 0 : 1;
}

int simulate_l2_result(const ExperimentConfig& cfg, const SynthesisResult& r) {
    const LinearSaturatedSystem& sys = cfg.system;
    if (!sys.channel) {
        std::fprintf(stderr, "simulate: the configured system has no performance channel\n");
        return 1;
    }
    auto suite = make_disturbance_suite(sys.nx(), 150, r.s, 50, protocol_seed(cfg));
    const double gamma = r.gamma();

    std::ofstream pairs(cfg.out_dir + "/simulate_l2_pairs.csv");
    pairs << "w_energy,z_energy,ratio\n";
    double max_ratio = 0.0;
    bool holds = true;
    int evaluated = 0;
    for (const SignalRecord& w : suite) {
        const double wn = signal_energy(w);
        if (wn == 0.0) continue;
        Trajectory t = simulate(sys, r.K, Vec::Zero(sys.nx()), w, w.horizon + 1);
        double zacc = 0.0;
        for (const Vec& zk : t.z) zacc += zk.squaredNorm();
        const double zn = std::sqrt(zacc);
        pairs << fmt(wn) << ',' << fmt(zn) << ',' << fmt(zn / wn) << "\n";
        max_ratio = std::max(max_ratio, zn / wn);
        if (zn > gamma * wn + 1e-6) holds = false;
        ++evaluated;
    }

    std::ofstream rep(cfg.out_dir + "/simulate_l2_report.txt");
    rep << "runs = " << evaluated << "\n";
    rep << "gamma = " << fmt(gamma) << "\n";
    rep << "max_ratio = " << fmt(max_ratio) << "\n";
    rep << "holds = " << (holds ? "yes" : "no") << "\n";
    std::printf("simulate: max energy ratio %.6g vs certified gain %.6g over %d runs\n",
                max_ratio, gamma, evaluated);
    return holds ? 0 : 1;
}

} // namespace

int cmd_simulate(const ExperimentConfig& cfg, const std::string& result_file) {
    fs::create_directories(cfg.out_dir);
    SynthesisResult r = read_result(result_file);
    if (r.K.rows() != cfg.system.nu() || r.K.cols() != cfg.system.nx()) {
        std::fprintf(stderr, "simulate: result dimensions do not match the configured system\n");
        return 1;
    }
    switch (r.problem) {
        case SynthProblem::Boa: return simulate_boa_result(cfg, r);
        case SynthProblem::Reachable: return simulate_reachable_result(cfg, r);
        case SynthProblem::L2Gain: return simulate_l2_result(cfg, r);
    }
    return 1;
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& result_file,
               std::optional<std::uint64_t> seed) {
    SynthesisResult r = read_result(result_file);
    const std::uint64_t s = seed.value_or(protocol_seed(cfg));

    std::optional<DataProducts> products;
    std::optional<EstimatedModel> model;
    if (r.mode == SynthMode::Direct || r.mode == SynthMode::Indirect) {
        Dataset ds = read_dataset(dataset_path(cfg, s));
        products = products_for(ds);
        if (r.mode == SynthMode::Indirect) model = estimate_open_loop(*products);
    } else {
        model = EstimatedModel{cfg.system.A, cfg.system.B};
    }

    ResidualReport rep = reevaluate_certificate(
        r, r.problem, r.eta, r.s, products ? &*products : nullptr, model ? &*model : nullptr,
        cfg.system.bounds, cfg.system.channel);
    for (const ConstraintSlack& c : rep.inequality_slacks)
        std::printf("verify: %-24s min_eig = %.6g\n", c.name.c_str(), c.raw_min_eig);
    for (const EqualitySlack& e : rep.equality_residuals)
        std::printf("verify: %-24s residual = %.6g\n", e.name.c_str(), e.max_abs_residual);
    const bool pass = rep.feasible(1e-6);
    std::printf("verify: %s\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"data-driven synthesis for input-saturated linear systems"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_text, mode_text, result_file;
    double eta = 0.0, s_level = 0.0, epsilon = 0.0;
    int jobs = 0;
    std::uint64_t verify_seed = 0;
    bool verify_seed_set = false;
    std::vector<CLI::Option*> eta_opts, s_opts, eps_opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file");
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--seeds", seeds_text, "seed list override, e.g. \"1 2 5..8\"");
        sub->add_option("--mode", mode_text, "direct | indirect | oracle");
        eta_opts.push_back(sub->add_option("--eta", eta, "decay rate override"));
        s_opts.push_back(sub->add_option("--s", s_level, "disturbance energy bound override"));
        eps_opts.push_back(sub->add_option("--epsilon", epsilon, "LMI strictness margin override"));
        sub->add_option("--jobs", jobs, "parallel workers across seeds");
    };

    CLI::App* gen = app.add_subcommand("generate", "collect experiment datasets");
    CLI::App* syn = app.add_subcommand("synth", "synthesize controllers from datasets");
    CLI::App* sim = app.add_subcommand("simulate", "simulate and check a synthesized result");
    CLI::App* cmp = app.add_subcommand("compare", "direct vs indirect vs oracle sweep");
    CLI::App* ver = app.add_subcommand("verify", "re-check a stored certificate");
    for (CLI::App* sub : {gen, syn, sim, cmp, ver}) add_common(sub);
    sim->add_option("--result", result_file, "result file to simulate")->required();
    ver->add_option("--result", result_file, "result file to verify")->required();
    auto* vs = ver->add_option("--seed", verify_seed, "dataset seed the result was built from");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    verify_seed_set = vs->count() > 0;
    auto any_set = [](const std::vector<CLI::Option*>& opts) {
        for (const CLI::Option* o : opts)
            if (o->count() > 0) return true;
        return false;
    };

    try {
        ExperimentConfig cfg = config_path.empty() ? benchmark_config() : load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!seeds_text.empty()) cfg.seeds = parse_seed_list(seeds_text);
        if (!mode_text.empty()) cfg.synth.mode = synth_mode_from_string(mode_text);
        if (any_set(eta_opts)) cfg.synth.eta = eta;
        if (any_set(s_opts)) cfg.synth.s = s_level;
        if (any_set(eps_opts)) cfg.synth.epsilon = epsilon;
        if (jobs > 0) cfg.jobs = jobs;
        if (!(cfg.synth.eta > 0.0 && cfg.synth.eta <= 1.0))
            throw std::invalid_argument("eta must lie in (0, 1]");

        if (gen->parsed()) return cmd_generate(cfg);
        if (syn->parsed()) return cmd_synth(cfg);
        if (cmp->parsed()) return cmd_compare(cfg);
        if (sim->parsed()) return cmd_simulate(cfg, result_file);
        if (ver->parsed())
            return cmd_verify(cfg, result_file,
                              verify_seed_set ? std::optional<std::uint64_t>(verify_seed)
                                              : std::nullopt);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}

} // namespace ddsat
