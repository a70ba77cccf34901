#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fgmhd/errors.hpp"
#include "fgmhd/estimators.hpp"
#include "fgmhd/rng.hpp"
#include "fgmhd/synth.hpp"

using namespace fgmhd;

namespace {

ImageGrid filled_square(int n) { return ImageGrid(n, n, 1.0); }

ImageGrid single_row(int n) {
    ImageGrid img(n, n);
    for (int x = 0; x < n; ++x) img.at(x, n / 2) = 1.0;
    return img;
}

// Real field with a prescribed isotropic spectral slope: |F(f)| ~ f^(-beta/2)
// with random phases, realized through an inverse FFT.
ImageGrid fractional_surface(int n, double beta, std::uint64_t seed) {
    const int nc = n / 2 + 1;
    std::vector<fftw_complex> half(static_cast<std::size_t>(n) * nc);
    Rng rng(seed);
    for (int ky = 0; ky < n; ++ky) {
        const int fy = ky <= n / 2 ? ky : ky - n;
        for (int kx = 0; kx < nc; ++kx) {
            auto& c = half[static_cast<std::size_t>(ky) * nc + kx];
            const double f = std::sqrt(static_cast<double>(fy) * fy + static_cast<double>(kx) * kx);
            if (f < 1.0) {
                c[0] = c[1] = 0.0;
                continue;
            }
            const double mag = std::pow(f, -beta / 2.0);
            const double phase = rng.next_double() * 2.0 * M_PI;
            c[0] = mag * std::cos(phase);
            c[1] = mag * std::sin(phase);
        }
    }
    // conjugate symmetry on the self-mapped columns kx = 0 and kx = n/2
    for (int kx : {0, n / 2}) {
        for (int ky = n / 2 + 1; ky < n; ++ky) {
            const auto& src = half[static_cast<std::size_t>(n - ky) * nc + kx];
            auto& dst = half[static_cast<std::size_t>(ky) * nc + kx];
            dst[0] = src[0];
            dst[1] = -src[1];
        }
        half[static_cast<std::size_t>(0) * nc + kx][1] = 0.0;
        half[static_cast<std::size_t>(n / 2) * nc + kx][1] = 0.0;
    }

    std::vector<double> real(static_cast<std::size_t>(n) * n);
    fftw_plan plan = fftw_plan_dft_c2r_2d(n, n, half.data(), real.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    const auto [lo, hi] = std::minmax_element(real.begin(), real.end());
    ImageGrid img(n, n);
    const double span = *hi - *lo;
    for (std::size_t i = 0; i < real.size(); ++i) img.pixels[i] = (real[i] - *lo) / span;
    return img;
}

// Koch snowflake polygon (equilateral triangle with outward bumps), filled by
// even-odd scanline. Test-only oracle geometry for the perimeter-area method.
struct Pt {
    double x, y;
};

void subdivide(std::vector<Pt>& ring, int depth) {
    for (int level = 0; level < depth; ++level) {
        std::vector<Pt> next;
        next.reserve(ring.size() * 4);
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const Pt p = ring[i];
            const Pt q = ring[(i + 1) % ring.size()];
            const double dx = (q.x - p.x) / 3.0, dy = (q.y - p.y) / 3.0;
            const Pt a{p.x + dx, p.y + dy};
            const Pt b{p.x + 2 * dx, p.y + 2 * dy};
            const double cs = 0.5, sn = std::sqrt(3.0) / 2.0;
            const Pt peak{a.x + cs * dx + sn * dy, a.y - sn * dx + cs * dy};
            next.push_back(p);
            next.push_back(a);
            next.push_back(peak);
            next.push_back(b);
        }
        ring.swap(next);
    }
}

void fill_snowflake(ImageGrid& canvas, double cx, double cy, double radius, int depth) {
    std::vector<Pt> ring;
    for (int i = 0; i < 3; ++i) {
        const double th = -M_PI / 2.0 + i * 2.0 * M_PI / 3.0;
        ring.push_back({cx + radius * std::cos(th), cy + radius * std::sin(th)});
    }
    subdivide(ring, depth);

    for (int y = 0; y < canvas.height; ++y) {
        const double fy = y + 0.5;
        std::vector<double> xs;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const Pt p = ring[i];
            const Pt q = ring[(i + 1) % ring.size()];
            if ((p.y <= fy && q.y > fy) || (q.y <= fy && p.y > fy))
                xs.push_back(p.x + (fy - p.y) / (q.y - p.y) * (q.x - p.x));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
            const int x1 = std::min(canvas.width - 1, static_cast<int>(std::floor(xs[i + 1] - 0.5)));
            for (int x = x0; x <= x1; ++x) canvas.at(x, y) = 1.0;
        }
    }
}

BinaryMask random_mask(int n, double density, std::uint64_t seed) {
    BinaryMask m(n, n);
    Rng rng(seed);
    for (auto& b : m.bits) b = rng.next_double() < density ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("loglog_fit recovers exact lines") {
    const LinearFit exact = loglog_fit({{0, 0}, {1, 2}, {2, 4}});
    CHECK(exact.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(exact.r_squared == doctest::Approx(1.0).epsilon(1e-14));

    const LinearFit constant = loglog_fit({{0, 1}, {1, 1}, {2, 1}});
    CHECK(constant.slope == doctest::Approx(0.0));
    CHECK(constant.r_squared == 1.0);

    // hand-computed OLS: slope 2, intercept -1/3
    const LinearFit bent = loglog_fit({{0, 0}, {1, 1}, {2, 4}});
    CHECK(bent.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(bent.intercept == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(loglog_fit({{0, 0}, {1, 1}}), DegenerateAbscissa);
    CHECK_THROWS_AS(loglog_fit({{1, 0}, {1, 1}, {1, 2}}), DegenerateAbscissa);
}

TEST_CASE("box counting matches analytic dimensions") {
    CHECK(box_counting(filled_square(1024)).dimension == doctest::Approx(2.0).epsilon(0.015));
    CHECK(box_counting(single_row(1024)).dimension == doctest::Approx(1.0).epsilon(0.03));

    const auto [sierpinski, dim] = canonical(CanonicalKind::sierpinski, 1024, 8);
    CHECK(dim == doctest::Approx(moran_dimension({0.5, 0.5, 0.5})).epsilon(1e-12));
    CHECK(std::abs(box_counting(sierpinski).dimension - dim) < 0.08);
}

TEST_CASE("box counting error cases") {
    CHECK_THROWS_AS(box_counting(ImageGrid(512, 512, 0.0)), EmptySet);
    EstimatorConfig cfg;
    cfg.max_scale_exp = 9;
    CHECK_THROWS_AS(box_counting(filled_square(64), cfg), ImageTooSmall);
}

TEST_CASE("box counts are monotone under set inclusion") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const BinaryMask small = random_mask(128, 0.05, seed);
        BinaryMask big = small;
        Rng rng(seed + 100);
        for (auto& b : big.bits)
            if (rng.next_double() < 0.05) b = 1;

        const auto ca = box_counts(small, 1, 5);
        const auto cb = box_counts(big, 1, 5);
        for (std::size_t i = 0; i < ca.size(); ++i) {
            CHECK(ca[i].first == cb[i].first);
            CHECK(ca[i].second <= cb[i].second);
        }
    }
}

TEST_CASE("box counting is stable under 2x nearest-neighbour upsampling") {
    const auto [img, dim] = canonical(CanonicalKind::sierpinski, 256, 6);
    ImageGrid up(512, 512);
    for (int y = 0; y < 512; ++y)
        for (int x = 0; x < 512; ++x) up.at(x, y) = img.at(x / 2, y / 2);

    EstimatorConfig shifted;
    shifted.min_scale_exp = 2;
    shifted.max_scale_exp = 7;
    const double base = box_counting(img).dimension;
    const double upsampled = box_counting(up, shifted).dimension;
    CHECK(std::abs(base - upsampled) < 0.05);
    (void)dim;
}

TEST_CASE("power spectrum clamps flat-spectrum noise to 2") {
    ImageGrid noise(256, 256);
    Rng rng(5);
    for (double& p : noise.pixels) p = rng.next_double();
    const HdEstimate est = power_spectrum(noise);
    CHECK(est.dimension == doctest::Approx(2.0));
}

TEST_CASE("power spectrum recovers a prescribed slope") {
    const ImageGrid surface = fractional_surface(256, 3.0, 42);
    const HdEstimate est = power_spectrum(surface);
    // beta = 3 -> surface dimension 2.5 -> planar 1.5
    CHECK(est.dimension == doctest::Approx(1.5).epsilon(0.1 / 1.5));
}

TEST_CASE("power spectrum error cases") {
    CHECK_THROWS_AS(power_spectrum(ImageGrid(128, 128, 0.25)), ConstantImage);
    CHECK_THROWS_AS(power_spectrum(ImageGrid(128, 64, 0.0)), NonSquare);
    CHECK_THROWS_AS(power_spectrum(ImageGrid(100, 100, 0.0)), NonSquare);
}

TEST_CASE("power spectrum is less accurate than box counting on a gasket") {
    const auto [img, dim] = canonical(CanonicalKind::sierpinski, 512, 7);
    const double err_box = std::abs(box_counting(img).dimension - dim);
    const double err_spec = std::abs(power_spectrum(img).dimension - dim);
    CHECK(err_spec > err_box);
}

TEST_CASE("perimeter-area on smooth islands gives dimension 1") {
    ImageGrid img(640, 256);
    int x0 = 8;
    for (int side : {8, 16, 32, 64, 128}) {
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) img.at(x0 + x, 8 + y) = 1.0;
        x0 += side + 8;
    }
    const HdEstimate est = perimeter_area(img);
    CHECK(est.slope == doctest::Approx(0.5).epsilon(0.05));
    CHECK(est.dimension == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("perimeter-area needs five islands") {
    ImageGrid img(256, 256);
    for (int y = 10; y < 30; ++y)
        for (int x = 10; x < 30; ++x) img.at(x, y) = 1.0;
    CHECK_THROWS_AS(perimeter_area(img), InsufficientIslands);
}

TEST_CASE("perimeter-area on koch-like flakes") {
    ImageGrid img(2048, 1152);
    double x0 = 40.0;
    for (int radius : {28, 56, 112, 224, 448}) {
        fill_snowflake(img, x0 + radius, 1152 / 2.0, radius, 4);
        x0 += 2.0 * radius + 40.0;
    }
    const HdEstimate est = perimeter_area(img);
    CHECK(est.dimension == doctest::Approx(std::log(4.0) / std::log(3.0)).epsilon(0.15 / 1.26));
}

TEST_CASE("sandbox matches analytic dimensions") {
    EstimatorConfig cfg;
    CHECK(sandbox(filled_square(1024), cfg, 1).dimension == doctest::Approx(2.0).epsilon(0.025));
    CHECK(sandbox(single_row(1024), cfg, 1).dimension == doctest::Approx(1.0).epsilon(0.05));

    const auto [sierpinski, dim] = canonical(CanonicalKind::sierpinski, 1024, 8);
    CHECK(std::abs(sandbox(sierpinski, cfg, 7).dimension - dim) < 0.12);
}

TEST_CASE("sandbox error cases") {
    CHECK_THROWS_AS(sandbox(ImageGrid(256, 256, 0.0), EstimatorConfig{}, 1), EmptySet);
    ImageGrid sparse(256, 256);
    for (int i = 0; i < 20; ++i) sparse.at(13 * i % 256, 7 * i % 256) = 1.0;
    CHECK_THROWS_AS(sandbox(sparse, EstimatorConfig{}, 1), TooSparse);
}

TEST_CASE("estimators are deterministic") {
    const auto [img, dim] = canonical(CanonicalKind::sierpinski, 256, 6);
    CHECK(box_counting(img).dimension == box_counting(img).dimension);
    CHECK(sandbox(img, EstimatorConfig{}, 9).dimension ==
          sandbox(img, EstimatorConfig{}, 9).dimension);
    (void)dim;
}
