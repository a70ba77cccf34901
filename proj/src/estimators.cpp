#include "fgmhd/estimators.hpp"

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>

#include "fgmhd/errors.hpp"
#include "fgmhd/rng.hpp"

namespace fgmhd {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int floor_log2(int n) {
    int k = 0;
    while ((1 << (k + 1)) <= n) ++k;
    return k;
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Resolves the -1 sentinels against the image geometry.
std::pair<int, int> scale_range(const EstimatorConfig& cfg, int side) {
    int lo = cfg.min_scale_exp, hi = cfg.max_scale_exp;
    if (lo < 0) lo = 1;
    if (hi < 0) hi = floor_log2(side) - 2;
    if (lo >= hi) throw config_error("scale range needs min_scale_exp < max_scale_exp");
    return {lo, hi};
}

double clamp_dimension(double d) { return std::min(2.0, std::max(0.0, d)); }

}  // namespace

LinearFit loglog_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw DegenerateAbscissa("need at least 3 points");
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0) throw DegenerateAbscissa("all abscissa values equal");

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r_squared = 1.0;  // constant ordinate: the fit is exact
    } else {
        double ss_res = 0.0;
        for (const auto& [x, y] : points) {
            const double r = y - (fit.slope * x + fit.intercept);
            ss_res += r * r;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

std::vector<std::pair<int, std::size_t>> box_counts(const BinaryMask& mask, int min_exp,
                                                    int max_exp) {
    std::vector<std::pair<int, std::size_t>> counts;
    int w = mask.width, h = mask.height;
    std::vector<std::uint8_t> level = mask.bits;

    if (min_exp <= 0) counts.emplace_back(0, mask.count());
    for (int k = 1; k <= max_exp; ++k) {
        const int nw = (w + 1) / 2, nh = (h + 1) / 2;
        std::vector<std::uint8_t> next(static_cast<std::size_t>(nw) * nh, 0);
        for (int y = 0; y < h; ++y) {
            const std::uint8_t* row = level.data() + static_cast<std::size_t>(y) * w;
            std::uint8_t* out = next.data() + static_cast<std::size_t>(y / 2) * nw;
            for (int x = 0; x < w; ++x)
                if (row[x]) out[x / 2] = 1;
        }
        level.swap(next);
        w = nw;
        h = nh;
        if (k >= min_exp) {
            std::size_t n = 0;
            for (std::uint8_t b : level) n += b;
            counts.emplace_back(k, n);
        }
    }
    return counts;
}

HdEstimate box_counting(const ImageGrid& image, const EstimatorConfig& cfg) {
    const auto t0 = clock_type::now();
    const auto [lo, hi] = scale_range(cfg, std::min(image.width, image.height));
    if (std::min(image.width, image.height) < (1 << hi))
        throw ImageTooSmall("image side below largest box size");

    const BinaryMask mask = binarize(image, cfg.binarize_threshold);
    if (mask.count() == 0) throw EmptySet("no occupied pixels after binarization");

    HdEstimate est;
    est.method = "box_counting";
    for (const auto& [k, n] : box_counts(mask, lo, hi)) {
        // abscissa log(1/eps), ordinate log N(eps)
        est.scale_points.emplace_back(-k * std::log(2.0), std::log(static_cast<double>(n)));
    }
    const LinearFit fit = loglog_fit(est.scale_points);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.r_squared = fit.r_squared;
    est.dimension = clamp_dimension(fit.slope);
    est.runtime = seconds_since(t0);
    return est;
}

HdEstimate power_spectrum(const ImageGrid& image, const EstimatorConfig& cfg) {
    const auto t0 = clock_type::now();
    const int n = image.width;
    if (image.width != image.height || !is_pow2(n))
        throw NonSquare("power spectrum needs a square power-of-two image");

    const double mean = mean_intensity(image);
    bool constant = true;
    for (double v : image.pixels)
        if (v != image.pixels[0]) {
            constant = false;
            break;
        }
    if (constant) throw ConstantImage("spectrum of a constant image is degenerate");

    std::vector<double> in(image.size());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = image.pixels[i] - mean;
    const int nc = n / 2 + 1;
    std::vector<fftw_complex> out(static_cast<std::size_t>(n) * nc);
    // fftw_execute is thread-safe, plan creation/destruction is not
    static std::mutex plan_mutex;
    fftw_plan plan;
    {
        const std::lock_guard<std::mutex> lock(plan_mutex);
        plan =
            fftw_plan_dft_r2c_2d(n, n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    }
    fftw_execute(plan);
    {
        const std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(plan);
    }

    // Radially averaged power over annular integer bins.
    const int nyquist = n / 2;
    std::vector<double> power(nyquist + 1, 0.0);
    std::vector<std::size_t> hits(nyquist + 1, 0);
    for (int ky = 0; ky < n; ++ky) {
        const int fy = ky <= n / 2 ? ky : ky - n;
        for (int kx = 0; kx < nc; ++kx) {
            const double f = std::sqrt(static_cast<double>(fy) * fy + static_cast<double>(kx) * kx);
            const int bin = static_cast<int>(f + 0.5);
            if (bin < 1 || bin > nyquist) continue;
            const auto& c = out[static_cast<std::size_t>(ky) * nc + kx];
            power[bin] += c[0] * c[0] + c[1] * c[1];
            hits[bin]++;
        }
    }

    int lo = std::max(1, static_cast<int>(std::lround(cfg.spectrum_band_low * nyquist)));
    int hi = std::min(nyquist, static_cast<int>(std::lround(cfg.spectrum_band_high * nyquist)));
    if (hi - lo < 2) {
        lo = 1;
        hi = nyquist;
    }

    HdEstimate est;
    est.method = "power_spectrum";
    for (int f = lo; f <= hi; ++f) {
        if (hits[f] == 0 || power[f] <= 0.0) continue;
        est.scale_points.emplace_back(std::log(static_cast<double>(f)),
                                      std::log(power[f] / hits[f]));
    }
    if (est.scale_points.size() < 3) throw ConstantImage("too little spectral support in band");

    const LinearFit fit = loglog_fit(est.scale_points);
    const double beta = -fit.slope;
    // fractional Brownian surface: beta = 8 - 2*D_surface
    double d_surface = (8.0 - beta) / 2.0;
    d_surface = std::min(3.0, std::max(2.0, d_surface));
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.r_squared = fit.r_squared;
    est.dimension = d_surface - 1.0;
    est.runtime = seconds_since(t0);
    return est;
}

namespace {

struct Component {
    std::size_t area = 0;
    std::size_t perimeter = 0;
};

// 8-connected component labelling; perimeter counts pixel edges against
// background or the image border (4-neighbourhood).
std::vector<Component> find_components(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<std::int32_t> label(mask.bits.size(), -1);
    std::vector<Component> comps;
    std::vector<std::pair<int, int>> stack;

    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
            if (!mask.bits[si] || label[si] >= 0) continue;
            const std::int32_t id = static_cast<std::int32_t>(comps.size());
            comps.push_back({});
            label[si] = id;
            stack.clear();
            stack.emplace_back(sx, sy);
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                Component& c = comps[id];
                c.area++;
                if (x == 0 || !mask.at(x - 1, y)) c.perimeter++;
                if (x == w - 1 || !mask.at(x + 1, y)) c.perimeter++;
                if (y == 0 || !mask.at(x, y - 1)) c.perimeter++;
                if (y == h - 1 || !mask.at(x, y + 1)) c.perimeter++;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (mask.bits[ni] && label[ni] < 0) {
                            label[ni] = id;
                            stack.emplace_back(nx, ny);
                        }
                    }
                }
            }
        }
    }
    return comps;
}

}  // namespace

HdEstimate perimeter_area(const ImageGrid& image, const EstimatorConfig& cfg) {
    const auto t0 = clock_type::now();
    const BinaryMask mask = binarize(image, cfg.binarize_threshold);

    std::vector<Component> comps;
    for (const Component& c : find_components(mask))
        if (c.area >= 10) comps.push_back(c);
    if (comps.size() < 5)
        throw InsufficientIslands("need at least 5 components with area >= 10, found " +
                                  std::to_string(comps.size()));

    HdEstimate est;
    est.method = "perimeter_area";
    for (const Component& c : comps)
        est.scale_points.emplace_back(std::log(static_cast<double>(c.area)),
                                      std::log(static_cast<double>(c.perimeter)));
    const LinearFit fit = loglog_fit(est.scale_points);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.r_squared = fit.r_squared;
    est.dimension = clamp_dimension(2.0 * fit.slope);
    est.runtime = seconds_since(t0);
    return est;
}

HdEstimate sandbox(const ImageGrid& image, const EstimatorConfig& cfg, std::uint64_t seed) {
    const auto t0 = clock_type::now();
    const BinaryMask mask = binarize(image, cfg.binarize_threshold);
    const std::size_t occupied = mask.count();
    if (occupied == 0) throw EmptySet("no occupied pixels after binarization");
    if (occupied < static_cast<std::size_t>(cfg.sandbox_centers))
        throw TooSparse("fewer occupied pixels than requested centers");

    const int w = mask.width, h = mask.height;

    // Largest window radius that always fits: start at min(w,h)/4 rounded to
    // a power of two, shrink while no occupied pixel is far enough from the
    // border to host it.
    int r_max = 1 << floor_log2(std::max(2, std::min(w, h) / 4));
    std::vector<std::uint32_t> eligible;
    while (r_max >= 8) {
        eligible.clear();
        for (int y = r_max; y < h - r_max; ++y)
            for (int x = r_max; x < w - r_max; ++x)
                if (mask.at(x, y)) eligible.push_back(static_cast<std::uint32_t>(y) * w + x);
        if (!eligible.empty()) break;
        r_max /= 2;
    }
    if (r_max < 8 || eligible.empty())
        throw TooSparse("cannot place window centers away from the border");

    // integral image for O(1) window sums
    std::vector<std::uint32_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        std::uint32_t rowsum = 0;
        for (int x = 0; x < w; ++x) {
            rowsum += mask.at(x, y);
            integral[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                integral[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + rowsum;
        }
    }
    auto window_sum = [&](int cx, int cy, int r) {
        const int x0 = cx - r, y0 = cy - r, x1 = cx + r + 1, y1 = cy + r + 1;
        return integral[static_cast<std::size_t>(y1) * (w + 1) + x1] -
               integral[static_cast<std::size_t>(y0) * (w + 1) + x1] -
               integral[static_cast<std::size_t>(y1) * (w + 1) + x0] +
               integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
    };

    Rng rng(seed);
    std::vector<std::uint32_t> centers(static_cast<std::size_t>(cfg.sandbox_centers));
    for (auto& c : centers) c = eligible[rng.next_below(eligible.size())];

    HdEstimate est;
    est.method = "sandbox";
    for (int r = 2; r <= r_max; r *= 2) {
        double mass = 0.0;
        for (std::uint32_t c : centers) {
            const int cx = static_cast<int>(c % w), cy = static_cast<int>(c / w);
            mass += window_sum(cx, cy, r);
        }
        mass /= static_cast<double>(centers.size());
        // scale variable is the window extent 2r+1, mass grows as extent^D
        est.scale_points.emplace_back(std::log(2.0 * r + 1.0), std::log(mass));
    }
    const LinearFit fit = loglog_fit(est.scale_points);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.r_squared = fit.r_squared;
    est.dimension = clamp_dimension(fit.slope);
    est.runtime = seconds_since(t0);
    return est;
}

}  // namespace fgmhd
