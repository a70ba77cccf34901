#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fgmhd/errors.hpp"
#include "fgmhd/estimators.hpp"
#include "fgmhd/ioutil.hpp"
#include "fgmhd/synth.hpp"

using namespace fgmhd;
namespace fs = std::filesystem;

TEST_CASE("moran dimension closed forms") {
    CHECK(std::abs(moran_dimension({0.5, 0.5, 0.5}) - std::log(3.0) / std::log(2.0)) < 1e-10);
    CHECK(std::abs(moran_dimension({1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3}) -
                   std::log(4.0) / std::log(3.0)) < 1e-10);
    // 2x^2 + x - 1 = 0 at x = 1/2, so the root is exactly 1
    CHECK(std::abs(moran_dimension({0.5, 0.25, 0.25}) - 1.0) < 1e-10);
}

TEST_CASE("moran dimension equal-ratio identity") {
    for (int n : {2, 3, 5, 9}) {
        for (double r : {0.2, 0.4, 0.45}) {
            const std::vector<double> ratios(static_cast<std::size_t>(n), r);
            const double expected = std::log(static_cast<double>(n)) / std::log(1.0 / r);
            CHECK(std::abs(moran_dimension(ratios) - expected) < 1e-12);
        }
    }
}

TEST_CASE("moran dimension is strictly increasing in each ratio") {
    const std::vector<double> base{0.5, 0.3, 0.2};
    const double d0 = moran_dimension(base);
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> bumped = base;
        bumped[i] += 0.01;
        CHECK(moran_dimension(bumped) > d0);
    }
}

TEST_CASE("moran dimension rejects bad input") {
    CHECK_THROWS_AS(moran_dimension({}), EmptyRatios);
    CHECK_THROWS_AS(moran_dimension({0.5, 1.0}), RatioOutOfRange);
    CHECK_THROWS_AS(moran_dimension({0.0}), RatioOutOfRange);
}

TEST_CASE("chaos game attractor hits the oracle dimension") {
    const ImageGrid img = chaos_game(sierpinski_ifs(), 200000, 1024, 42);
    const double oracle = moran_dimension({0.5, 0.5, 0.5});
    CHECK(std::abs(box_counting(img).dimension - oracle) < 0.08);
}

TEST_CASE("chaos game basics") {
    const ImageGrid one = chaos_game(sierpinski_ifs(), 1, 64, 3);
    CHECK(binarize(one, 0.5).count() <= 1);

    const ImageGrid a = chaos_game(sierpinski_ifs(), 5000, 128, 9);
    const ImageGrid b = chaos_game(sierpinski_ifs(), 5000, 128, 9);
    CHECK(a.pixels == b.pixels);

    IfsSystem expanding = sierpinski_ifs();
    expanding.maps[0].a = 1.2;
    CHECK_THROWS_AS(chaos_game(expanding, 100, 64, 1), NonContractiveMap);
}

TEST_CASE("chaos game map permutation leaves coarse box counts stable") {
    IfsSystem permuted = sierpinski_ifs();
    std::swap(permuted.maps[0], permuted.maps[2]);
    const ImageGrid a = chaos_game(sierpinski_ifs(), 200000, 512, 77);
    const ImageGrid b = chaos_game(permuted, 200000, 512, 77);
    const auto ca = box_counts(binarize(a, 0.5), 4, 6);
    const auto cb = box_counts(binarize(b, 0.5), 4, 6);
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const double rel = std::abs(static_cast<double>(ca[i].second) -
                                    static_cast<double>(cb[i].second)) /
                           static_cast<double>(ca[i].second);
        CHECK(rel < 0.02);
    }
}

TEST_CASE("canonical constructions") {
    const auto [square, d_square] = canonical(CanonicalKind::filled_square, 256, 1);
    CHECK(d_square == 2.0);
    CHECK(binarize(square, 0.5).count() == 256u * 256u);

    const auto [line, d_line] = canonical(CanonicalKind::line, 256, 1);
    CHECK(d_line == 1.0);
    CHECK(binarize(line, 0.5).count() == 256u);

    const auto [sierpinski, d_sier] = canonical(CanonicalKind::sierpinski, 1024, 8);
    CHECK(d_sier == doctest::Approx(1.5849625007).epsilon(1e-10));
    CHECK(std::abs(box_counting(sierpinski).dimension - d_sier) < 0.08);

    CHECK_THROWS_AS(canonical(CanonicalKind::sierpinski, 100, 4), config_error);
    CHECK_THROWS_AS(canonical_kind_from_string("menger"), UnsupportedKind);
}

TEST_CASE("synth_dataset writes files and a manifest") {
    const fs::path dir = fs::temp_directory_path() / "fgmhd_synth_test";
    fs::remove_all(dir);

    SynthSpec spec;
    spec.counts = {4, 4, 0};
    spec.image_size = 128;
    spec.chaos_points = 30000;
    const DatasetManifest manifest = synth_dataset(spec, dir.string(), 42);

    CHECK(manifest.entries.size() == 8);
    for (const ManifestEntry& e : manifest.entries) {
        CHECK(fs::exists(manifest.resolve(e)));
        CHECK(e.hd_label >= 0.0);
        CHECK(e.hd_label <= 2.0);
        CHECK((e.label_source == "theoretical" || e.label_source == "box_counting"));
    }
    const DatasetManifest loaded = load_manifest((dir / "manifest.json").string());
    CHECK(loaded.entries.size() == manifest.entries.size());
    fs::remove_all(dir);
}

TEST_CASE("synth_dataset is byte-deterministic") {
    const fs::path dir1 = fs::temp_directory_path() / "fgmhd_synth_a";
    const fs::path dir2 = fs::temp_directory_path() / "fgmhd_synth_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    SynthSpec spec;
    spec.counts = {2, 3, 2};
    spec.image_size = 64;
    spec.chaos_points = 20000;
    synth_dataset(spec, dir1.string(), 7);
    synth_dataset(spec, dir2.string(), 7);

    CHECK(read_text_file((dir1 / "manifest.json").string()) ==
          read_text_file((dir2 / "manifest.json").string()));
    for (const auto& entry : fs::directory_iterator(dir1)) {
        const fs::path twin = dir2 / entry.path().filename();
        CHECK(read_text_file(entry.path().string()) == read_text_file(twin.string()));
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}
