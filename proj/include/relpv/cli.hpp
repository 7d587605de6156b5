#pragma once

// Command-line front end: basis | gen | train | eval | bench | cost | verify.
// Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
// Every option can also come from a `key = value` config file (--config);
// flags given on the command line win, unknown config keys are rejected.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "relpv/checkpoint.hpp"
#include "relpv/cost_model.hpp"
#include "relpv/data_io.hpp"
#include "relpv/errors.hpp"
#include "relpv/model_spec.hpp"
#include "relpv/model_zoo.hpp"
#include "relpv/network.hpp"
#include "relpv/rten.hpp"
#include "relpv/train.hpp"
#include "relpv/verify.hpp"

namespace relpv::cli {

namespace detail {

inline void apply_threads(int t) {
#ifdef _OPENMP
    if (t > 0) omp_set_num_threads(t);
#else
    (void)t;
#endif
}

inline bool eat_prefix(std::string& s, const char* p) {
    const std::string pref(p);
    if (s.rfind(pref, 0) != 0) return false;
    s = s.substr(pref.size());
    return true;
}

// parses a leading integer, consuming it; -1 if none
inline int eat_int(std::string& s) {
    std::size_t k = 0;
    while (k < s.size() && s[k] >= '0' && s[k] <= '9') ++k;
    if (k == 0) return -1;
    const int v = std::stoi(s.substr(0, k));
    s = s.substr(k);
    return v;
}

inline std::string trim(const std::string& s) {
    const char* ws = " \t\r";
    const std::size_t b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const std::size_t e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Applies `key = value` lines from `path` to the options of `sub`. Values
// already given on the command line win; unknown keys are an error. Applied
// after parsing so the file can also satisfy options the commands require.
inline void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParameterError("config " + where + ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw ParameterError("config " + where + ": empty key");
        if (val.size() >= 2 && ((val.front() == '"' && val.back() == '"') ||
                                (val.front() == '\'' && val.back() == '\'')))
            val = val.substr(1, val.size() - 2);
        if (key == "config")
            throw ParameterError("config " + where + ": a config file cannot nest another");
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw ParameterError("config " + where + ": unknown key '" + key + "' for '" +
                                 sub->get_name() + "'");
        if (opt->count() > 0) continue;  // command line wins
        opt->add_result(val);
        opt->run_callback();
    }
}

}  // namespace detail

inline Scale parse_scale(const std::string& w) {
    if (w == "desk") return Scale::Desk;
    if (w == "paper") return Scale::Paper;
    throw ParameterError("scale must be 'desk' or 'paper', got '" + w + "'");
}

// Builder names: mc3d_N, lp_mc3d_N, lp_mc3d_N_fF, mc3d_N_tK, mc3d_N_bK,
// voxnet, lp_voxnet, lp3dcnn. Anything else is treated as a spec file path.
inline ModelSpec resolve_model(const std::string& id, Scale scale, int classes) {
    using detail::eat_int;
    using detail::eat_prefix;
    if (id == "voxnet") return build_voxnet_family(VoxnetVariant::Conv, classes, scale);
    if (id == "lp_voxnet") return build_voxnet_family(VoxnetVariant::Relpv, classes, scale);
    if (id == "lp3dcnn") return build_lp3dcnn(scale, classes);
    std::string s = id;
    const bool lp = eat_prefix(s, "lp_");
    if (eat_prefix(s, "mc3d_")) {
        const int n = eat_int(s);
        if (n > 0) {
            if (s.empty()) return lp ? build_lp_mc3d(n, scale, classes)
                                     : build_mc3d(n, scale, classes);
            if (lp && eat_prefix(s, "_f")) {
                const int f = eat_int(s);
                if (f > 0 && s.empty())
                    return build_lp_mc3d_f(n, static_cast<std::size_t>(f), scale, classes);
            }
            if (!lp && (s[0] == '_') && s.size() >= 2 && (s[1] == 't' || s[1] == 'b')) {
                const HybridSide side = s[1] == 't' ? HybridSide::FromTop : HybridSide::FromBottom;
                s = s.substr(2);
                const int k = eat_int(s);
                if (k > 0 && s.empty()) return build_hybrid(n, k, side, scale, classes);
            }
        }
    }
    if (std::filesystem::exists(id)) return load_model_file(id);
    throw ParameterError(
        "unknown model '" + id +
        "' (builders: mc3d_N, lp_mc3d_N, lp_mc3d_N_fF, mc3d_N_tK, mc3d_N_bK, voxnet, "
        "lp_voxnet, lp3dcnn; or a model spec file path)");
}

// --- basis -------------------------------------------------------------------

struct BasisOpts {
    int n = 3;
    std::string out;
    bool print_w = false;
};

inline int cmd_basis(const BasisOpts& o) {
    const StftBasis b = build_basis(o.n);
    double worst_sum = 0.0;
    for (std::size_t r = 0; r < 26; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < b.W.shape()[1]; ++c) s += b.W.at2(r, c);
        worst_sum = std::max(worst_sum, std::abs(s));
    }
    std::cout << "window " << b.n << "^3, basis " << shape_to_string(b.W.shape())
              << " (13 frequency points, interleaved re/im rows)\n";
    const auto& pts = frequency_points();
    for (std::size_t i = 0; i < pts.size(); ++i)
        std::cout << "  v" << i + 1 << " = [" << pts[i].signs[0] << "," << pts[i].signs[1] << ","
                  << pts[i].signs[2] << "] / " << b.n << "\n";
    std::cout << "max |row sum| = " << worst_sum << " (zero-mean rows)\n";
    if (o.print_w) {
        char buf[40];
        for (std::size_t r = 0; r < 26; ++r) {
            for (std::size_t c = 0; c < b.W.shape()[1]; ++c) {
                std::snprintf(buf, sizeof buf, "% .17g", b.W.at2(r, c));
                std::cout << (c ? " " : "") << buf;
            }
            std::cout << "\n";
        }
    }
    if (!o.out.empty()) {
        save_rten(o.out, b.W);
        std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

// --- gen ---------------------------------------------------------------------

struct GenOpts {
    std::string kind = "clips";
    int classes = 5;
    int train_per_class = 40;
    int test_per_class = 20;
    std::size_t frames = 8;
    std::size_t side = 32;  // matches the desk-scale model input
    std::size_t grid = 16;
    std::uint64_t seed = 1;
    std::string out;
};

inline int cmd_gen(const GenOpts& o) {
    if (o.out.empty()) throw ParameterError("gen: --out directory is required");
    // `gen` owns the output directory: replace any previous dataset so stale
    // splits or manifest lines cannot mix with the new one
    for (const char* piece : {"train", "test", "val", "manifest.txt"})
        std::filesystem::remove_all(std::filesystem::path(o.out) / piece);
    Rng root(o.seed);
    LabeledDataset<float> train, test;
    if (o.kind == "clips") {
        train = gen_synthetic_clips<float>(o.classes, o.train_per_class, o.frames, o.side,
                                           root.child(1).next_u64());
        test = gen_synthetic_clips<float>(o.classes, o.test_per_class, o.frames, o.side,
                                          root.child(2).next_u64());
    } else if (o.kind == "shapes") {
        train = gen_voxel_shapes<float>(o.classes, o.train_per_class, o.grid,
                                        root.child(1).next_u64());
        test = gen_voxel_shapes<float>(o.classes, o.test_per_class, o.grid,
                                       root.child(2).next_u64());
    } else {
        throw ParameterError("gen: --kind must be 'clips' or 'shapes'");
    }
    train.seed = o.seed;
    test.seed = o.seed;
    save_dataset_dir(o.out, "train", train);
    save_dataset_dir(o.out, "test", test);
    std::cout << "wrote " << train.size() << " train / " << test.size() << " test samples ("
              << o.kind << ", " << o.classes << " classes) under " << o.out << "\n";
    return 0;
}

// --- train -------------------------------------------------------------------

struct TrainOpts {
    std::string model = "lp_mc3d_3";
    std::string scale = "desk";
    int classes = 0;
    std::string data;
    std::string out;
    std::string metrics;
    int epochs = 16;
    std::size_t batch = 16;
    double lr = 0.008;
    double momentum = 0.9;
    bool nesterov = false;
    std::string schedule = "step";
    double factor = 0.5;
    int every = 8;
    int patience = 2;
    std::uint64_t seed = 1;
    int threads = 0;
    bool quiet = false;
};

inline LrSchedule make_schedule(const TrainOpts& o) {
    LrSchedule s;
    if (o.schedule == "fixed")
        s.policy = LrPolicy::Fixed;
    else if (o.schedule == "step")
        s.policy = LrPolicy::Step;
    else if (o.schedule == "plateau")
        s.policy = LrPolicy::Plateau;
    else
        throw ParameterError("schedule must be fixed|step|plateau, got '" + o.schedule + "'");
    s.initial = o.lr;
    s.factor = o.factor;
    s.every = o.every;
    s.patience = o.patience;
    return s;
}

inline int cmd_train(const TrainOpts& o) {
    detail::apply_threads(o.threads);
    if (o.data.empty()) throw ParameterError("train: --data directory is required");
    if (o.out.empty()) throw ParameterError("train: --out directory is required");

    LabeledDataset<float> train = load_dataset_dir<float>(o.data, "train");
    const bool has_val = std::filesystem::exists(std::filesystem::path(o.data) / "val");
    LabeledDataset<float> val = load_dataset_dir<float>(o.data, has_val ? "val" : "test");
    if (!o.quiet)
        std::cout << "data: " << train.size() << " train, " << val.size()
                  << (has_val ? " val" : " test-as-val") << ", " << train.classes << " classes\n";

    const int classes = o.classes > 0 ? o.classes : train.classes;
    ModelSpec spec = resolve_model(o.model, parse_scale(o.scale), classes);
    if (spec.classes != train.classes)
        throw ParameterError("model emits " + std::to_string(spec.classes) +
                             " classes but dataset has " + std::to_string(train.classes));

    ModelInstance<float> M(spec);
    Rng root(o.seed);
    M.init_params(root.child(1).next_u64());

    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch = o.batch;
    cfg.sgd.momentum = o.momentum;
    cfg.sgd.nesterov = o.nesterov;
    cfg.schedule = make_schedule(o);
    cfg.seed = root.child(2).next_u64();
    std::vector<EpochMetrics> rows = train_loop(M, train, val, cfg,
                                                o.quiet ? nullptr : &std::cout);

    save_checkpoint(o.out, M);
    const std::string mpath =
        o.metrics.empty() ? (std::filesystem::path(o.out) / "metrics.csv").string() : o.metrics;
    std::ofstream mf(mpath, std::ios::trunc);
    if (!mf) throw Error("cannot write metrics file: " + mpath);
    mf << metrics_to_csv(rows);
    mf.close();
    if (!o.quiet) {
        if (!rows.empty())
            std::cout << "final: train_acc " << rows.back().train_acc << ", val_acc "
                      << rows.back().val_acc << "\n";
        std::cout << "checkpoint " << o.out << ", metrics " << mpath << "\n";
    }
    return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalOpts {
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    std::size_t batch = 16;
    int threads = 0;
};

inline int cmd_eval(const EvalOpts& o) {
    detail::apply_threads(o.threads);
    if (o.checkpoint.empty()) throw ParameterError("eval: --checkpoint directory is required");
    if (o.data.empty()) throw ParameterError("eval: --data directory is required");
    ModelSpec spec =
        load_model_file((std::filesystem::path(o.checkpoint) / "model.txt").string());
    ModelInstance<float> M(spec);
    load_checkpoint(o.checkpoint, M);
    LabeledDataset<float> ds = load_dataset_dir<float>(o.data, o.split);
    if (ds.classes != spec.classes)
        throw ParameterError("dataset has " + std::to_string(ds.classes) +
                             " classes but model emits " + std::to_string(spec.classes));
    EvalResult<float> r = evaluate(M, ds, o.batch);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < r.confusion.size(); ++k) correct += r.confusion[k][k];
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s: loss %.6f, top-1 %.4f (%zu/%zu)", o.split.c_str(),
                  r.loss, r.acc, correct, ds.size());
    std::cout << buf << "\nconfusion (rows = true class, cols = predicted):\n";
    for (std::size_t t = 0; t < r.confusion.size(); ++t) {
        std::cout << "  class " << t << ":";
        for (std::size_t p = 0; p < r.confusion[t].size(); ++p)
            std::cout << " " << r.confusion[t][p];
        std::cout << "\n";
    }
    return 0;
}

// --- bench -------------------------------------------------------------------

struct BenchOpts {
    std::string model;
    std::string sweep;  // family name: sweeps n = 3,5,7,9
    std::string scale = "desk";
    int classes = 0;
    int repeats = 5;
    bool backward = false;
    std::uint64_t seed = 1;
    int threads = 0;
};

namespace detail {

struct BenchRow {
    std::string name;
    std::size_t params = 0;
    std::size_t flops = 0;
    double median_ms = 0.0;
    double min_ms = 0.0;
};

inline BenchRow bench_model(const ModelSpec& spec, int repeats, bool backward,
                            std::uint64_t seed) {
    ModelInstance<float> M(spec);
    M.init_params(seed);
    Rng rng(seed ^ 0xb3);
    Tensor<float> x(spec.input);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    std::vector<const Tensor<float>*> batch{&x};

    auto run_once = [&] {
        if (!backward) {
            forward_batch(M, batch, /*training=*/false);
            return;
        }
        BatchTape<float> tape;
        Tensor<float> logits = forward_batch(M, batch, /*training=*/true, &tape);
        auto xe = softmax_crossentropy(logits, std::vector<int>{0});
        backward_batch(M, tape, xe.grad);
    };
    run_once();  // warm-up: page in buffers and basis tables
    std::vector<double> ms;
    ms.reserve(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        run_once();
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    BenchRow row;
    row.name = spec.name;
    row.params = count_params(spec);
    row.flops = count_flops(spec);
    row.median_ms = ms[ms.size() / 2];
    row.min_ms = ms.front();
    return row;
}

}  // namespace detail

inline int cmd_bench(const BenchOpts& o) {
    detail::apply_threads(o.threads);
    if (o.repeats < 1) throw ParameterError("bench: --repeats must be >= 1");
    const Scale scale = parse_scale(o.scale);
    std::vector<ModelSpec> specs;
    if (!o.sweep.empty()) {
        for (int n : {3, 5, 7, 9})
            specs.push_back(resolve_model(o.sweep + "_" + std::to_string(n), scale, o.classes));
    } else if (!o.model.empty()) {
        specs.push_back(resolve_model(o.model, scale, o.classes));
    } else {
        throw ParameterError("bench: give --model NAME or --sweep FAMILY (mc3d | lp_mc3d)");
    }
    std::cout << "forward" << (o.backward ? "+backward" : "") << " timing, " << o.repeats
              << " repeats, batch 1\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %12s %14s %12s %12s", "model", "params",
                  "analytic flops", "median ms", "min ms");
    std::cout << buf << "\n";
    for (const ModelSpec& s : specs) {
        detail::BenchRow r = detail::bench_model(s, o.repeats, o.backward, o.seed);
        std::snprintf(buf, sizeof buf, "%-16s %12zu %14zu %12.3f %12.3f", r.name.c_str(),
                      r.params, r.flops, r.median_ms, r.min_ms);
        std::cout << buf << "\n";
    }
    return 0;
}

// --- cost --------------------------------------------------------------------

struct CostOpts {
    std::string model = "mc3d_3";
    std::string scale = "paper";
    int classes = 0;
    std::string input;  // CxDxHxW override
    bool no_bias = false;
    int bytes = 4;
};

inline Shape parse_chw(const std::string& s) {
    Shape out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t x = s.find('x', pos);
        const std::string tok = s.substr(pos, x == std::string::npos ? x : x - pos);
        if (tok.empty()) throw ParameterError("bad shape token in '" + s + "'");
        out.push_back(static_cast<std::size_t>(std::stoull(tok)));
        if (x == std::string::npos) break;
        pos = x + 1;
    }
    if (out.size() != 4) throw ParameterError("shape must be CxDxHxW, got '" + s + "'");
    return out;
}

inline int cmd_cost(const CostOpts& o) {
    ModelSpec spec = resolve_model(o.model, parse_scale(o.scale), o.classes);
    if (!o.input.empty()) {
        spec.input = parse_chw(o.input);
        infer_shapes(spec);  // revalidate under the new input
    }
    const CostReport rep = cost_report(spec, !o.no_bias, static_cast<std::size_t>(o.bytes));
    std::cout << "model " << spec.name << ", input " << shape_to_string(spec.input) << "\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s %-10s %14s %16s  %s", "id", "kind", "params", "flops",
                  "output");
    std::cout << buf << "\n";
    for (const LayerCost& lc : rep.layers) {
        std::snprintf(buf, sizeof buf, "%-4d %-10s %14zu %16zu  %s", lc.id, lc.kind.c_str(),
                      lc.params, lc.flops, shape_to_string(lc.out_shape).c_str());
        std::cout << buf << "\n";
    }
    std::snprintf(buf, sizeof buf, "%-15s %14zu %16zu", "total", rep.total_params,
                  rep.total_flops);
    std::cout << buf << "\n";
    std::cout << "(" << static_cast<double>(rep.total_params) / 1e6 << "M params, "
              << static_cast<double>(rep.total_flops) / 1e6
              << "M flops per application, model size " << rep.model_bytes << " bytes)\n\n"
              << flop_convention_text() << "\n";
    return 0;
}

// --- verify ------------------------------------------------------------------

struct VerifyOpts {
    std::string suite = "all";
    std::uint64_t seed = 0x7265764d31ULL;
    int equivalence_inputs = 100;
    std::size_t decorr_positions = 10000;
    int threads = 0;
};

inline int cmd_verify(const VerifyOpts& o) {
    detail::apply_threads(o.threads);
    verify::Options vo;
    vo.seed = o.seed;
    vo.equivalence_inputs = o.equivalence_inputs;
    vo.decorr_positions = o.decorr_positions;
    const auto checks = verify::run_suite(o.suite, vo);
    return verify::print_checks(checks, std::cout) ? 0 : 1;
}

// --- wiring ------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"local-phase volume blocks: fixed-basis 3D STFT layers, a reference 3D "
                 "convolution, a minimal trainer, and verification suites"};
    app.require_subcommand(1);

    // Per-subcommand `key = value` config files, applied after parsing so that
    // command-line flags override file values (and so the file can satisfy
    // options a command requires). Map nodes are stable, so binding the slot
    // by reference is safe.
    std::map<CLI::App*, std::string> config_paths;
    auto add_config = [&config_paths](CLI::App* sub) {
        sub->add_option("--config", config_paths[sub],
                        "read options from a key = value file (flags win)");
    };

    BasisOpts bo;
    CLI::App* basis = app.add_subcommand("basis", "inspect or export the fixed STFT basis");
    basis->add_option("--n", bo.n, "window extent (odd, >= 3)")->capture_default_str();
    basis->add_option("--out", bo.out, "write the 26 x n^3 matrix as an RTEN file");
    basis->add_flag("--print-w", bo.print_w, "print every matrix entry");
    add_config(basis);

    GenOpts go;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic labeled dataset");
    gen->add_option("--kind", go.kind, "clips (moving blobs) or shapes (voxel primitives)")
        ->capture_default_str();
    gen->add_option("--classes", go.classes, "number of classes")->capture_default_str();
    gen->add_option("--train-per-class", go.train_per_class, "training samples per class")
        ->capture_default_str();
    gen->add_option("--test-per-class", go.test_per_class, "test samples per class")
        ->capture_default_str();
    gen->add_option("--frames", go.frames, "clip length (clips)")->capture_default_str();
    gen->add_option("--side", go.side, "clip spatial side (clips)")->capture_default_str();
    gen->add_option("--grid", go.grid, "occupancy grid side (shapes)")->capture_default_str();
    gen->add_option("--seed", go.seed, "root random seed")->capture_default_str();
    gen->add_option("--out", go.out, "output dataset directory (required)");
    add_config(gen);

    TrainOpts to;
    CLI::App* train = app.add_subcommand("train", "train a model on a generated dataset");
    train->add_option("--model", to.model, "builder name or model spec file")
        ->capture_default_str();
    train->add_option("--scale", to.scale, "desk or paper (builders only)")
        ->capture_default_str();
    train->add_option("--classes", to.classes, "override builder class count (0 = from data)")
        ->capture_default_str();
    train->add_option("--data", to.data, "dataset directory from `gen` (required)");
    train->add_option("--out", to.out, "checkpoint output directory (required)");
    train->add_option("--metrics", to.metrics, "metrics CSV path (default <out>/metrics.csv)");
    train->add_option("--epochs", to.epochs, "training epochs")->capture_default_str();
    train->add_option("--batch", to.batch, "mini-batch size")->capture_default_str();
    train->add_option("--lr", to.lr, "initial learning rate")->capture_default_str();
    train->add_option("--momentum", to.momentum, "SGD momentum")->capture_default_str();
    train->add_flag("--nesterov", to.nesterov, "Nesterov momentum update");
    train->add_option("--schedule", to.schedule, "fixed | step | plateau")
        ->capture_default_str();
    train->add_option("--factor", to.factor, "lr decay factor")->capture_default_str();
    train->add_option("--every", to.every, "step schedule: decay every k epochs")
        ->capture_default_str();
    train->add_option("--patience", to.patience, "plateau schedule: epochs without improvement")
        ->capture_default_str();
    train->add_option("--seed", to.seed, "root random seed (init + batch order)")
        ->capture_default_str();
    train->add_option("--threads", to.threads, "worker thread cap (0 = library default)")
        ->capture_default_str();
    train->add_flag("--quiet", to.quiet, "suppress per-epoch log lines");
    add_config(train);

    EvalOpts eo;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    eval->add_option("--checkpoint", eo.checkpoint,
                     "checkpoint directory from `train` (required)");
    eval->add_option("--data", eo.data, "dataset directory (required)");
    eval->add_option("--split", eo.split, "dataset split to score")->capture_default_str();
    eval->add_option("--batch", eo.batch, "evaluation batch size")->capture_default_str();
    eval->add_option("--threads", eo.threads, "worker thread cap (0 = library default)")
        ->capture_default_str();
    add_config(eval);

    BenchOpts no;
    CLI::App* bench = app.add_subcommand("bench", "time model forward passes");
    bench->add_option("--model", no.model, "single model to time");
    bench->add_option("--sweep", no.sweep, "family to sweep over n = 3,5,7,9 (mc3d | lp_mc3d)");
    bench->add_option("--scale", no.scale, "desk or paper")->capture_default_str();
    bench->add_option("--classes", no.classes, "override builder class count")
        ->capture_default_str();
    bench->add_option("--repeats", no.repeats, "timed repetitions per model")
        ->capture_default_str();
    bench->add_flag("--backward", no.backward, "time forward + backward instead");
    bench->add_option("--seed", no.seed, "root random seed")->capture_default_str();
    bench->add_option("--threads", no.threads, "worker thread cap (0 = library default)")
        ->capture_default_str();
    add_config(bench);

    CostOpts co;
    CLI::App* cost = app.add_subcommand("cost", "analytic parameter / FLOP / activation report");
    cost->add_option("--model", co.model, "builder name or model spec file")
        ->capture_default_str();
    cost->add_option("--scale", co.scale, "desk or paper (builders only)")
        ->capture_default_str();
    cost->add_option("--classes", co.classes, "override builder class count")
        ->capture_default_str();
    cost->add_option("--input", co.input, "override input shape, CxDxHxW");
    cost->add_flag("--no-bias", co.no_bias, "count parameters without biases");
    cost->add_option("--bytes", co.bytes, "bytes per scalar for activation sizes")
        ->capture_default_str();
    add_config(cost);

    VerifyOpts vo;
    CLI::App* verify_cmd = app.add_subcommand("verify", "run the verification suites");
    verify_cmd->add_option("--suite", vo.suite, "basis | oracle | grad | counts | decorr | all")
        ->capture_default_str();
    verify_cmd->add_option("--seed", vo.seed, "root random seed")->capture_default_str();
    verify_cmd->add_option("--equivalence-inputs", vo.equivalence_inputs,
                           "random inputs per evaluator-equivalence case")
        ->capture_default_str();
    verify_cmd->add_option("--decorr-positions", vo.decorr_positions,
                           "minimum sampled positions for the decorrelation check")
        ->capture_default_str();
    verify_cmd->add_option("--threads", vo.threads, "worker thread cap (0 = library default)")
        ->capture_default_str();
    add_config(verify_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto& [sub, path] : config_paths)
            if (!path.empty() && sub->parsed()) detail::apply_config_file(sub, path);
        if (*basis) return cmd_basis(bo);
        if (*gen) return cmd_gen(go);
        if (*train) return cmd_train(to);
        if (*eval) return cmd_eval(eo);
        if (*bench) return cmd_bench(no);
        if (*cost) return cmd_cost(co);
        if (*verify_cmd) return cmd_verify(vo);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;  // unreachable: require_subcommand(1)
}

}  // namespace relpv::cli
