// fgmhd: synthesize labeled fractal rasters, estimate their dimension with
// classical and learned methods, train the toy recursive generator with a
// momentum-scheduled hybrid loss, and filter samples by estimated dimension.
//
// Every command is fully determined by its flag vector; the FGMHD_SEED
// environment variable overrides the built-in default seed.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "fgmhd/bench.hpp"
#include "fgmhd/cascade.hpp"
#include "fgmhd/errors.hpp"
#include "fgmhd/estimators.hpp"
#include "fgmhd/ioutil.hpp"
#include "fgmhd/plot.hpp"
#include "fgmhd/regressor.hpp"
#include "fgmhd/sampling.hpp"
#include "fgmhd/scheduler.hpp"
#include "fgmhd/synth.hpp"

namespace fs = std::filesystem;
using namespace fgmhd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("FGMHD_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            std::cerr << "warning: ignoring unparsable FGMHD_SEED\n";
        }
    }
    return 42;
}

ScheduleKind parse_schedule(const std::string& name) {
    if (name == "mmds") return ScheduleKind::mmds;
    if (name == "exp") return ScheduleKind::exp;
    if (name == "none") return ScheduleKind::none;
    throw config_error("schedule must be mmds, exp or none");
}

HdProbe make_probe(const std::string& estimator, const std::string& weights,
                   RegressorModel& storage) {
    HdProbe probe;
    if (estimator == "box_counting") {
        probe.kind = HdEstimatorKind::box_counting;
    } else if (estimator == "regressor") {
        if (weights.empty()) throw config_error("--estimator regressor needs --weights");
        storage = load_weights(weights);
        probe.kind = HdEstimatorKind::regressor;
        probe.model = &storage;
    } else {
        throw config_error("estimator must be box_counting or regressor");
    }
    return probe;
}

std::string trace_csv(const std::vector<HybridLossRecord>& records) {
    std::string out = std::string(kTraceCsvHeader) + "\n";
    for (const HybridLossRecord& r : records) {
        out += std::to_string(r.epoch) + "," + csv_double(r.lambda) + "," + csv_double(r.m) + "," +
               csv_double(r.l_gen) + "," + csv_double(r.l_hd) + "," + csv_double(r.l_total) + "," +
               csv_double(r.l_val) + "," + csv_double(r.mean_hd_gen) + "\n";
    }
    return out;
}

std::vector<double> column(const std::vector<HybridLossRecord>& records,
                           double HybridLossRecord::*field) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const HybridLossRecord& r : records) v.push_back(r.*field);
    return v;
}

std::vector<double> epoch_axis(std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
    return x;
}

struct ToyRunFlags {
    std::string schedule = "mmds";
    int epochs = 500;
    double hd_target = 1.5849625007211562;
    double mu = 0.9;
    double gamma = 1.0;
    double lambda_final = -1.0;  // <0: calibrate from an mmds run
    int n_refs = 8;
    int n_hd_samples = 64;
    std::string ref_dir;
    std::string estimator = "box_counting";
    std::string weights;
    double spsa_step = 1.2;
    double spsa_perturb = 0.2;
    double spsa_decay = 0.002;
};

ToyTrainConfig build_toy_config(const ToyRunFlags& flags, std::uint64_t seed,
                                RegressorModel& model_storage) {
    ToyTrainConfig cfg;
    if (flags.ref_dir.empty()) {
        cfg.references = default_toy_references(flags.n_refs, seed);
    } else {
        std::vector<fs::path> paths;
        for (const auto& entry : fs::directory_iterator(flags.ref_dir))
            if (entry.path().extension() == ".pgm") paths.push_back(entry.path());
        std::sort(paths.begin(), paths.end());
        for (const fs::path& p : paths) {
            ImageGrid img = load_pgm(p.string());
            if (img.width != 64 || img.height != 64) img = resample_area(img, 64, 64);
            cfg.references.push_back(to_image(binarize(img, 0.5)));
        }
        if (cfg.references.empty())
            throw config_error("no .pgm references under " + flags.ref_dir);
    }
    cfg.hd_target = flags.hd_target;
    cfg.schedule = parse_schedule(flags.schedule);
    cfg.mmds.mu = flags.mu;
    cfg.mmds.gamma = flags.gamma;
    cfg.epochs = flags.epochs;
    cfg.n_hd_samples = flags.n_hd_samples;
    cfg.spsa = {flags.spsa_step, flags.spsa_perturb, flags.spsa_decay};
    cfg.probe = make_probe(flags.estimator, flags.weights, model_storage);

    if (cfg.schedule == ScheduleKind::exp) {
        if (flags.lambda_final >= 0.0) {
            cfg.exp_lambda_final = flags.lambda_final;
        } else {
            // calibrate the baseline endpoint against the adaptive schedule
            ToyTrainConfig probe_cfg = cfg;
            probe_cfg.schedule = ScheduleKind::mmds;
            const ToyTrainResult ref = train_toy(probe_cfg, seed);
            cfg.exp_lambda_final = ref.records.back().lambda;
        }
    }
    return cfg;
}

int cmd_synth(const std::string& out_dir, int n_canonical, int n_ifs, int n_cascade, int size,
              int chaos_points, std::uint64_t seed) {
    SynthSpec spec;
    spec.counts = {n_canonical, n_ifs, n_cascade};
    spec.image_size = size;
    spec.chaos_points = chaos_points;
    const DatasetManifest manifest = synth_dataset(spec, out_dir, seed);
    std::cout << "wrote " << manifest.entries.size() << " images + manifest.json under " << out_dir
              << "\n";
    return kExitOk;
}

int cmd_estimate(const std::vector<std::string>& paths, const std::string& manifest_path,
                 const std::string& method, const std::string& weights, double threshold,
                 int threads, std::uint64_t seed) {
    std::vector<std::string> files = paths;
    if (!manifest_path.empty()) {
        const DatasetManifest manifest = load_manifest(manifest_path);
        for (const ManifestEntry& e : manifest.entries) files.push_back(manifest.resolve(e));
    }
    if (files.empty()) throw config_error("estimate needs image paths or --manifest");

    RegressorModel model;
    const bool use_regressor = method == "regressor";
    if (use_regressor) {
        if (weights.empty()) throw config_error("--method regressor needs --weights");
        model = load_weights(weights);
    } else if (method != "box" && method != "spectrum" && method != "perimeter" &&
               method != "sandbox") {
        throw config_error("unknown method: " + method);
    }

    EstimatorConfig cfg;
    cfg.binarize_threshold = threshold;
    std::vector<std::string> lines(files.size());
    std::vector<std::string> failures(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
        try {
            const ImageGrid img = load_pgm(files[i]);
            double dim = 0.0, r2 = 0.0;
            if (use_regressor) {
                dim = std::clamp(predict(model, img), 0.0, 2.0);
            } else {
                HdEstimate est;
                if (method == "box")
                    est = box_counting(img, cfg);
                else if (method == "spectrum")
                    est = power_spectrum(img, cfg);
                else if (method == "perimeter")
                    est = perimeter_area(img, cfg);
                else
                    est = sandbox(img, cfg, mix_seed(seed, i));
                dim = est.dimension;
                r2 = est.r_squared;
            }
            lines[i] = files[i] + "," + method + "," + csv_double(dim) + "," + csv_double(r2);
        } catch (const std::exception& e) {
            failures[i] = files[i] + ": " + e.what();
        }
    });

    bool any_failure = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!lines[i].empty())
            std::cout << lines[i] << "\n";
        else {
            std::cerr << "estimate failed for " << failures[i] << "\n";
            any_failure = true;
        }
    }
    return any_failure ? kExitNumeric : kExitOk;
}

int cmd_bench(const std::string& manifest_path, const std::string& methods_arg,
              const std::string& out_csv, const std::string& weights, int threads, bool timing,
              std::uint64_t seed) {
    std::vector<std::string> methods;
    std::string token;
    for (char c : methods_arg + ",") {
        if (c == ',') {
            if (!token.empty()) methods.push_back(token);
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    if (methods.empty()) throw config_error("no methods given");

    RegressorModel model;
    const RegressorModel* model_ptr = nullptr;
    for (const std::string& m : methods)
        if (m == "regressor") {
            if (weights.empty()) throw config_error("bench with regressor needs --weights");
            model = load_weights(weights);
            model_ptr = &model;
        }

    const DatasetManifest manifest = load_manifest(manifest_path);
    const std::string dataset_name = fs::path(manifest_path).parent_path().filename().string();
    const std::vector<BenchRow> rows =
        run_bench(manifest, methods, threads, model_ptr, seed, dataset_name);
    atomic_write_text(out_csv, bench_csv(rows, timing));

    std::vector<BenchRow> by_mae = rows;
    std::sort(by_mae.begin(), by_mae.end(),
              [](const BenchRow& a, const BenchRow& b) { return a.mae < b.mae; });
    std::cout << "accuracy ranking (MAE, " << by_mae.front().dataset << "):\n";
    for (const BenchRow& r : by_mae)
        std::cout << "  " << r.method << "  mae=" << csv_double(r.mae)
                  << "  n=" << r.n_images
                  << (timing ? "  mean_ms=" + csv_double(r.mean_runtime_ms, 3) : std::string())
                  << "\n";
    std::cout << "csv written to " << out_csv << "\n";
    return kExitOk;
}

int cmd_train_regressor(const std::string& manifest_path, const std::string& out_weights,
                        const TrainHyper& hyper, std::uint64_t seed) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    RegressorModel model = init_model(seed);
    const TrainReport report = train(model, manifest, hyper, seed);
    save_weights(model, out_weights);
    std::cout << "epochs=" << report.epochs_run << " train_mse=" << csv_double(report.train_mse)
              << " holdout_mae=" << csv_double(report.holdout_mae)
              << " wall_s=" << csv_double(report.wall_time, 1) << "\n"
              << "weights written to " << out_weights << "\n";
    return kExitOk;
}

int cmd_ablate(const std::string& manifest_path, const std::string& out_csv,
               const TrainHyper& hyper, bool timing, std::uint64_t seed) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    const std::vector<std::vector<int>> sets{{3}, {5}, {7}, {3, 5, 7}};
    const std::vector<AblationRow> rows = kernel_ablation(manifest, sets, hyper, seed);

    std::string csv = std::string(kAblationCsvHeader) + "\n";
    for (const AblationRow& r : rows)
        csv += r.kernels + "," + csv_double(r.holdout_loss) + "," +
               csv_double(timing ? r.infer_ms : 0.0, 4) + "\n";
    atomic_write_text(out_csv, csv);
    std::cout << "ablation csv written to " << out_csv << "\n";
    return kExitOk;
}

int cmd_train_toy(const ToyRunFlags& flags, const std::string& out_dir, std::uint64_t seed) {
    RegressorModel model_storage;
    const ToyTrainConfig cfg = build_toy_config(flags, seed, model_storage);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create " + out_dir);

    const ToyTrainResult result = train_toy(cfg, seed);
    const auto& records = result.records;

    atomic_write_text((fs::path(out_dir) / "trace.csv").string(), trace_csv(records));
    atomic_write_text((fs::path(out_dir) / "params.json").string(),
                      cascade_params_to_json(result.params));

    const std::vector<double> epochs = epoch_axis(records.size());
    atomic_write_text(
        (fs::path(out_dir) / "lambda.svg").string(),
        svg_line_plot("loss weight schedule", "epoch", "lambda",
                      {{"lambda", "#1f77b4", epochs, column(records, &HybridLossRecord::lambda)}}));
    atomic_write_text(
        (fs::path(out_dir) / "loss.svg").string(),
        svg_line_plot("hybrid training losses", "epoch", "loss",
                      {{"total", "#2ca02c", epochs, column(records, &HybridLossRecord::l_total)},
                       {"generative", "#d62728", epochs, column(records, &HybridLossRecord::l_gen)},
                       {"dimension", "#9467bd", epochs, column(records, &HybridLossRecord::l_hd)}}));

    const HybridLossRecord& last = records.back();
    std::cout << "final: lambda=" << csv_double(last.lambda) << " l_gen=" << csv_double(last.l_gen)
              << " l_hd=" << csv_double(last.l_hd) << " mean_hd=" << csv_double(last.mean_hd_gen)
              << " target=" << csv_double(last.hd_target) << "\n"
              << "trace.csv, params.json, lambda.svg, loss.svg written under " << out_dir << "\n";
    return kExitOk;
}

int cmd_sweep_mmds(const ToyRunFlags& base_flags, const std::string& out_csv,
                   std::uint64_t seed) {
    static const std::pair<double, double> grid[] = {
        {0.9, 0.5}, {0.9, 1.0}, {0.9, 5.0}, {0.8, 1.0}, {0.95, 1.0}};

    std::string csv = std::string(kSweepCsvHeader) + "\n";
    for (const auto& [mu, gamma] : grid) {
        ToyRunFlags flags = base_flags;
        flags.schedule = "mmds";
        flags.mu = mu;
        flags.gamma = gamma;
        RegressorModel model_storage;
        const ToyTrainConfig cfg = build_toy_config(flags, seed, model_storage);
        const ToyTrainResult result = train_toy(cfg, seed);
        const std::vector<double> totals = column(result.records, &HybridLossRecord::l_total);
        const int window = std::min<int>(20, std::max<int>(2, flags.epochs / 4));
        csv += csv_double(mu, 2) + "," + csv_double(gamma, 2) + "," + csv_double(totals.back()) +
               "," + csv_double(smoothness(totals, window)) + "," +
               std::to_string(convergence_epoch(totals, window)) + "\n";
    }
    atomic_write_text(out_csv, csv);
    std::cout << "sweep csv written to " << out_csv << "\n";
    return kExitOk;
}

int cmd_sample(const std::string& params_path, const std::vector<double>& taus, int batch,
               int max_retries, const std::string& estimator, const std::string& weights,
               const std::string& out_csv, const std::string& save_dir, std::uint64_t seed) {
    const CascadeParams params = load_cascade_params(params_path);
    RegressorModel model_storage;
    HdProbe probe = make_probe(estimator, weights, model_storage);
    const SampleSource generator = [&params](std::uint64_t s) {
        return cascade_generate(params, s);
    };

    if (taus.empty()) throw config_error("sample needs --tau values");
    std::vector<double> sorted = taus;
    std::sort(sorted.begin(), sorted.end());

    if (sorted.size() > 1) {
        const std::vector<SweepRow> rows =
            threshold_sweep(generator, sorted, batch, probe, seed, max_retries);
        std::string csv = std::string(kSamplingCsvHeader) + "\n";
        for (const SweepRow& r : rows)
            csv += csv_double(r.tau, 3) + "," + std::to_string(r.n_attempted) + "," +
                   std::to_string(r.n_kept) + "," + csv_double(r.fill_rate) + "," +
                   csv_double(r.mean_hd) + "," + csv_double(r.mean_retries) + "," +
                   csv_double(r.hamming_diversity) + "," + csv_double(r.hd_coverage) + "\n";
        atomic_write_text(out_csv, csv);
        std::cout << "threshold sweep csv written to " << out_csv << "\n";
        return kExitOk;
    }

    SamplingConfig cfg;
    cfg.tau = sorted.front();
    cfg.batch = batch;
    cfg.max_retries_per_slot = max_retries;
    cfg.probe = probe;
    const SampleSet set = rejection_sample(generator, cfg, seed);

    std::string csv = "slot,retries,dimension\n";
    for (const KeptSample& k : set.kept)
        csv += std::to_string(k.slot) + "," + std::to_string(set.per_slot_retries[k.slot]) + "," +
               csv_double(k.hd_estimate) + "\n";
    atomic_write_text(out_csv, csv);

    if (!save_dir.empty()) {
        std::error_code ec;
        fs::create_directories(save_dir, ec);
        if (ec) throw IoFailure("cannot create " + save_dir);
        for (const KeptSample& k : set.kept) {
            char name[32];
            std::snprintf(name, sizeof name, "kept_%04d.pgm", k.slot);
            save_pgm(k.image, (fs::path(save_dir) / name).string());
        }
    }
    std::cout << "kept " << set.kept.size() << "/" << batch << " slots, " << set.attempts
              << " attempts, " << set.exhausted_slots.size() << " exhausted; csv written to "
              << out_csv << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractal synthesis, dimension estimation and dimension-guided sampling"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted after the subcommand too

    std::uint64_t seed = default_seed();
    int threads = 1;
    app.add_option("--seed", seed, "root seed for every stochastic step");
    app.add_option("--threads", threads, "worker threads for per-image estimation and sampling");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a labeled fractal dataset");
    std::string synth_out = "dataset";
    int n_canonical = 100, n_ifs = 100, n_cascade = 100, synth_size = 256, chaos_points = 200000;
    synth->add_option("--out-dir", synth_out, "output directory");
    synth->add_option("--canonical", n_canonical, "canonical construction count");
    synth->add_option("--ifs", n_ifs, "random IFS count");
    synth->add_option("--cascade", n_cascade, "random cascade count");
    synth->add_option("--size", synth_size, "raster side (power of two)");
    synth->add_option("--chaos-points", chaos_points, "chaos game iterations per IFS image");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "estimate dimensions of images");
    std::vector<std::string> est_paths;
    std::string est_manifest, est_method = "box", est_weights;
    double est_threshold = 0.5;
    estimate->add_option("paths", est_paths, "PGM image paths");
    estimate->add_option("--manifest", est_manifest, "estimate every image of a manifest");
    estimate->add_option("--method", est_method, "box|spectrum|perimeter|sandbox|regressor");
    estimate->add_option("--weights", est_weights, "regressor weight file");
    estimate->add_option("--threshold", est_threshold, "binarization threshold");

    // bench
    auto* bench = app.add_subcommand("bench", "score estimation methods against dataset labels");
    std::string bench_manifest, bench_methods = "box,spectrum,perimeter,sandbox";
    std::string bench_out = "bench.csv", bench_weights;
    bool bench_no_timing = false;
    bench->add_option("--manifest", bench_manifest, "dataset manifest")->required();
    bench->add_option("--methods", bench_methods, "comma-separated method list");
    bench->add_option("--out", bench_out, "output CSV path");
    bench->add_option("--weights", bench_weights, "regressor weight file");
    bench->add_flag("--no-timing", bench_no_timing,
                    "zero the runtime column for byte-reproducible output");

    // train-regressor
    auto* train_reg = app.add_subcommand("train-regressor", "fit the convolutional estimator");
    std::string reg_manifest, reg_out = "regressor.fgw";
    TrainHyper reg_hyper;
    train_reg->add_option("--manifest", reg_manifest, "dataset manifest")->required();
    train_reg->add_option("--out", reg_out, "weight file to write");
    train_reg->add_option("--epochs", reg_hyper.epochs, "training epochs");
    train_reg->add_option("--lr", reg_hyper.lr, "learning rate");
    train_reg->add_option("--momentum", reg_hyper.momentum, "momentum coefficient");
    train_reg->add_option("--batch", reg_hyper.batch, "mini-batch size");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "branch kernel ablation of the estimator");
    std::string abl_manifest, abl_out = "ablation.csv";
    TrainHyper abl_hyper;
    abl_hyper.epochs = 60;
    bool abl_no_timing = false;
    ablate->add_option("--manifest", abl_manifest, "dataset manifest")->required();
    ablate->add_option("--out", abl_out, "output CSV path");
    ablate->add_option("--epochs", abl_hyper.epochs, "training epochs per subset");
    ablate->add_option("--lr", abl_hyper.lr, "learning rate");
    ablate->add_option("--batch", abl_hyper.batch, "mini-batch size");
    ablate->add_flag("--no-timing", abl_no_timing,
                     "zero the inference-time column for byte-reproducible output");

    // train-toy
    auto* toy = app.add_subcommand("train-toy", "hybrid-loss training of the cascade generator");
    ToyRunFlags toy_flags;
    std::string toy_out = "toy_run";
    toy->add_option("--out-dir", toy_out, "output directory");
    toy->add_option("--schedule", toy_flags.schedule, "mmds|exp|none");
    toy->add_option("--epochs", toy_flags.epochs, "training epochs");
    toy->add_option("--hd-target", toy_flags.hd_target, "target dimension");
    toy->add_option("--mu", toy_flags.mu, "momentum coefficient of the schedule");
    toy->add_option("--gamma", toy_flags.gamma, "scale factor of the schedule");
    toy->add_option("--lambda-final", toy_flags.lambda_final,
                    "endpoint of the exp schedule (default: calibrated from an mmds run)");
    toy->add_option("--refs", toy_flags.n_refs, "number of built-in references");
    toy->add_option("--ref-dir", toy_flags.ref_dir, "directory of 64x64 PGM references");
    toy->add_option("--hd-samples", toy_flags.n_hd_samples, "samples per dimension-loss estimate");
    toy->add_option("--estimator", toy_flags.estimator, "box_counting|regressor");
    toy->add_option("--weights", toy_flags.weights, "regressor weight file");
    toy->add_option("--spsa-step", toy_flags.spsa_step, "perturbation update step");
    toy->add_option("--spsa-perturb", toy_flags.spsa_perturb, "perturbation probe radius");
    toy->add_option("--spsa-decay", toy_flags.spsa_decay, "step decay rate");

    // sweep-mmds
    auto* sweep = app.add_subcommand("sweep-mmds", "mu/gamma grid on the toy task");
    ToyRunFlags sweep_flags;
    std::string sweep_out = "sweep.csv";
    sweep->add_option("--out", sweep_out, "output CSV path");
    sweep->add_option("--epochs", sweep_flags.epochs, "training epochs per grid point");
    sweep->add_option("--hd-target", sweep_flags.hd_target, "target dimension");
    sweep->add_option("--refs", sweep_flags.n_refs, "number of built-in references");
    sweep->add_option("--hd-samples", sweep_flags.n_hd_samples,
                      "samples per dimension-loss estimate");

    // sample
    auto* sample = app.add_subcommand("sample", "dimension-thresholded rejection sampling");
    std::string smp_params, smp_estimator = "box_counting", smp_weights;
    std::string smp_out = "sample.csv", smp_save_dir;
    std::vector<double> smp_taus;
    int smp_batch = 64, smp_retries = 50;
    sample->add_option("--params", smp_params, "cascade parameter JSON")->required();
    sample->add_option("--tau", smp_taus, "threshold(s); several values run a sweep")->required();
    sample->add_option("--batch", smp_batch, "slots per threshold");
    sample->add_option("--max-retries", smp_retries, "regeneration budget per slot");
    sample->add_option("--estimator", smp_estimator, "box_counting|regressor");
    sample->add_option("--weights", smp_weights, "regressor weight file");
    sample->add_option("--out", smp_out, "output CSV path");
    sample->add_option("--save-images", smp_save_dir, "directory for kept samples as PGM");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, n_canonical, n_ifs, n_cascade, synth_size, chaos_points,
                             seed);
        if (estimate->parsed())
            return cmd_estimate(est_paths, est_manifest, est_method, est_weights, est_threshold,
                                threads, seed);
        if (bench->parsed())
            return cmd_bench(bench_manifest, bench_methods, bench_out, bench_weights, threads,
                             !bench_no_timing, seed);
        if (train_reg->parsed()) return cmd_train_regressor(reg_manifest, reg_out, reg_hyper, seed);
        if (ablate->parsed())
            return cmd_ablate(abl_manifest, abl_out, abl_hyper, !abl_no_timing, seed);
        if (toy->parsed()) return cmd_train_toy(toy_flags, toy_out, seed);
        if (sweep->parsed()) return cmd_sweep_mmds(sweep_flags, sweep_out, seed);
        if (sample->parsed())
            return cmd_sample(smp_params, smp_taus, smp_batch, smp_retries, smp_estimator,
                              smp_weights, smp_out, smp_save_dir, seed);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
