#include "fgmhd/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>

#include "fgmhd/errors.hpp"
#include "fgmhd/estimators.hpp"
#include "fgmhd/ioutil.hpp"
#include "fgmhd/rng.hpp"

namespace fgmhd {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (std::thread& t : pool) t.join();
}

namespace {

struct PerImage {
    bool ok = false;
    double abs_err = 0.0;
    double runtime_ms = 0.0;
};

}  // namespace

std::vector<BenchRow> run_bench(const DatasetManifest& manifest,
                                const std::vector<std::string>& methods, int threads,
                                const RegressorModel* model, std::uint64_t seed,
                                const std::string& dataset_name) {
    if (manifest.entries.empty()) throw EmptyDataset("bench needs a non-empty manifest");
    for (const std::string& m : methods) {
        if (m != "box" && m != "spectrum" && m != "perimeter" && m != "sandbox" &&
            m != "regressor")
            throw config_error("unknown method: " + m);
        if (m == "regressor" && !model)
            throw config_error("regressor method needs trained weights");
    }

    std::vector<ImageGrid> images(manifest.entries.size());
    std::vector<double> labels(manifest.entries.size());
    parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
        images[i] = load_pgm(manifest.resolve(manifest.entries[i]));
        labels[i] = manifest.entries[i].hd_label;
    });

    std::vector<BenchRow> rows;
    for (const std::string& method : methods) {
        std::vector<PerImage> per(images.size());
        parallel_for(images.size(), threads, [&](std::size_t i) {
            const auto t0 = std::chrono::steady_clock::now();
            double est = 0.0;
            try {
                if (method == "box")
                    est = box_counting(images[i]).dimension;
                else if (method == "spectrum")
                    est = power_spectrum(images[i]).dimension;
                else if (method == "perimeter")
                    est = perimeter_area(images[i]).dimension;
                else if (method == "sandbox")
                    est = sandbox(images[i], EstimatorConfig{}, mix_seed(seed, i)).dimension;
                else
                    est = std::clamp(predict(*model, images[i]), 0.0, 2.0);
            } catch (const numeric_error&) {
                return;  // method not applicable to this image
            } catch (const config_error&) {
                return;
            }
            per[i].ok = true;
            per[i].abs_err = std::abs(est - labels[i]);
            per[i].runtime_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
        });

        BenchRow row;
        row.method = method;
        row.dataset = dataset_name;
        for (const PerImage& p : per) {
            if (!p.ok) continue;
            row.n_images++;
            row.mae += p.abs_err;
            row.mean_runtime_ms += p.runtime_ms;
        }
        if (row.n_images > 0) {
            row.mae /= row.n_images;
            row.mean_runtime_ms /= row.n_images;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows, bool with_timing) {
    std::string out = std::string(kBenchCsvHeader) + "\n";
    for (const BenchRow& r : rows) {
        out += r.method + "," + r.dataset + "," + std::to_string(r.n_images) + "," +
               csv_double(r.mae) + "," + csv_double(with_timing ? r.mean_runtime_ms : 0.0, 3) +
               "\n";
    }
    return out;
}

}  // namespace fgmhd
