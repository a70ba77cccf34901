#include "fgmhd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fgmhd/errors.hpp"
#include "fgmhd/estimators.hpp"
#include "fgmhd/rng.hpp"

namespace fgmhd {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

double AffineMap::spectral_norm() const {
    // singular values of [[a,b],[c,d]] from the closed form on M^T M
    const double t = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * det * det));
    return std::sqrt((t + disc) / 2.0);
}

double moran_dimension(const std::vector<double>& ratios) {
    if (ratios.empty()) throw EmptyRatios("no contraction ratios given");
    for (double r : ratios)
        if (!(r > 0.0 && r < 1.0)) throw RatioOutOfRange("ratio outside (0,1)");

    auto residual = [&](double d) {
        double s = 0.0;
        for (double r : ratios) s += std::pow(r, d);
        return s - 1.0;
    };

    double lo = 0.0, hi = 1.0;
    while (residual(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1024.0) throw numeric_error("moran bisection failed to bracket");
    }
    // bisect to interval collapse; the residual then sits well under 1e-12
    double mid = lo;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        mid = 0.5 * (lo + hi);
        const double f = residual(mid);
        if (f == 0.0) break;
        if (f > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

ImageGrid chaos_game(const IfsSystem& ifs, std::int64_t n_points, int size, std::uint64_t seed) {
    if (ifs.maps.size() < 2) throw config_error("IFS needs at least 2 maps");
    if (n_points < 1 || size < 16) throw config_error("chaos_game: bad n_points or size");
    for (const AffineMap& m : ifs.maps)
        if (m.spectral_norm() >= 1.0)
            throw NonContractiveMap("map in '" + ifs.name + "' is not a contraction");

    std::vector<double> cum;
    double acc = 0.0;
    for (const AffineMap& m : ifs.maps) {
        acc += m.weight;
        cum.push_back(acc);
    }

    ImageGrid img(size, size);
    Rng rng(seed);
    double x = 0.5, y = 0.5;
    const std::int64_t total = n_points + 100;
    for (std::int64_t i = 0; i < total; ++i) {
        const double u = rng.next_double() * acc;
        std::size_t pick = 0;
        while (pick + 1 < cum.size() && u >= cum[pick]) ++pick;
        const AffineMap& m = ifs.maps[pick];
        const double nx = m.a * x + m.b * y + m.e;
        const double ny = m.c * x + m.d * y + m.f;
        x = nx;
        y = ny;
        if (i < 100) continue;  // burn-in
        if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) continue;
        const int px = std::min(size - 1, static_cast<int>(x * size));
        const int py = std::min(size - 1, static_cast<int>(y * size));
        img.at(px, py) = 1.0;
    }
    return img;
}

namespace {

void require_canonical_geometry(int size, int depth) {
    if (depth < 1) throw config_error("canonical depth must be >= 1");
    if (size < 64 || (size & (size - 1)) != 0)
        throw config_error("canonical size must be a power of two >= 64");
}

int log2i(int n) {
    int k = 0;
    while ((1 << k) < n) ++k;
    return k;
}

ImageGrid raster_sierpinski(int size, int depth) {
    // Right-angle gasket: a cell is kept when the top `depth` bits of x and y
    // share no set bit (the subdivision rule of the three-map half-scale IFS).
    const int n = log2i(size);
    const int shift = std::max(0, n - std::min(depth, n));
    ImageGrid img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (((x >> shift) & (y >> shift)) == 0) img.at(x, y) = 1.0;
    return img;
}

ImageGrid raster_cantor_dust(int size, int depth) {
    // Product of two middle-thirds sets: keep pixels whose first `depth`
    // ternary digits avoid 1 in both coordinates.
    auto in_cantor = [depth](double t) {
        for (int l = 0; l < depth; ++l) {
            t *= 3.0;
            const int digit = std::min(2, static_cast<int>(t));
            if (digit == 1) return false;
            t -= digit;
        }
        return true;
    };
    ImageGrid img(size, size);
    for (int y = 0; y < size; ++y) {
        const double fy = (y + 0.5) / size;
        if (!in_cantor(fy)) continue;
        for (int x = 0; x < size; ++x)
            if (in_cantor((x + 0.5) / size)) img.at(x, y) = 1.0;
    }
    return img;
}

struct P2 {
    double x, y;
};

void koch_subdivide(std::vector<P2>& pts, int depth) {
    for (int level = 0; level < depth; ++level) {
        std::vector<P2> next;
        next.reserve((pts.size() - 1) * 4 + 1);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const P2 p = pts[i], q = pts[i + 1];
            const double dx = (q.x - p.x) / 3.0, dy = (q.y - p.y) / 3.0;
            const P2 a{p.x + dx, p.y + dy};
            const P2 b{p.x + 2 * dx, p.y + 2 * dy};
            // outward bump: rotate the middle third by -60 degrees
            const double c = 0.5, s = std::sqrt(3.0) / 2.0;
            const P2 peak{a.x + c * dx + s * dy, a.y - s * dx + c * dy};
            next.push_back(p);
            next.push_back(a);
            next.push_back(peak);
            next.push_back(b);
        }
        next.push_back(pts.back());
        pts.swap(next);
    }
}

void draw_polyline(ImageGrid& img, const std::vector<P2>& pts) {
    const int size = img.width;
    auto plot = [&](double x, double y) {
        const int px = std::min(size - 1, std::max(0, static_cast<int>(x)));
        const int py = std::min(size - 1, std::max(0, static_cast<int>(y)));
        img.at(px, py) = 1.0;
    };
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const P2 p = pts[i], q = pts[i + 1];
        const double len = std::hypot(q.x - p.x, q.y - p.y);
        const int steps = std::max(1, static_cast<int>(len * 2.0));
        for (int s = 0; s <= steps; ++s) {
            const double t = static_cast<double>(s) / steps;
            plot(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y));
        }
    }
}

ImageGrid raster_koch(int size, int depth) {
    std::vector<P2> pts{{0.0, 0.0}, {1.0, 0.0}};
    koch_subdivide(pts, depth);
    // fit into the raster with a small inset; the bump (height sqrt(3)/6)
    // points toward -y in curve space and is centered vertically
    const double inset = 0.02 * size;
    const double span = size - 2.0 * inset;
    const double h = std::sqrt(3.0) / 6.0;
    ImageGrid img(size, size);
    std::vector<P2> raster(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        raster[i].x = inset + pts[i].x * span;
        raster[i].y = size / 2.0 + h * span / 2.0 + pts[i].y * span;
    }
    draw_polyline(img, raster);
    return img;
}

}  // namespace

std::pair<ImageGrid, double> canonical(CanonicalKind kind, int size, int depth) {
    require_canonical_geometry(size, depth);
    switch (kind) {
        case CanonicalKind::sierpinski:
            return {raster_sierpinski(size, depth), std::log(3.0) / std::log(2.0)};
        case CanonicalKind::koch_curve:
            return {raster_koch(size, depth), std::log(4.0) / std::log(3.0)};
        case CanonicalKind::cantor_dust:
            return {raster_cantor_dust(size, depth), std::log(4.0) / std::log(3.0)};
        case CanonicalKind::filled_square:
            return {ImageGrid(size, size, 1.0), 2.0};
        case CanonicalKind::line: {
            ImageGrid img(size, size);
            for (int x = 0; x < size; ++x) img.at(x, size / 2) = 1.0;
            return {img, 1.0};
        }
    }
    throw UnsupportedKind("unknown canonical kind");
}

CanonicalKind canonical_kind_from_string(const std::string& name) {
    if (name == "sierpinski") return CanonicalKind::sierpinski;
    if (name == "koch_curve") return CanonicalKind::koch_curve;
    if (name == "cantor_dust") return CanonicalKind::cantor_dust;
    if (name == "filled_square") return CanonicalKind::filled_square;
    if (name == "line") return CanonicalKind::line;
    throw UnsupportedKind("unknown canonical kind: " + name);
}

std::string to_string(CanonicalKind kind) {
    switch (kind) {
        case CanonicalKind::sierpinski: return "sierpinski";
        case CanonicalKind::koch_curve: return "koch_curve";
        case CanonicalKind::cantor_dust: return "cantor_dust";
        case CanonicalKind::filled_square: return "filled_square";
        case CanonicalKind::line: return "line";
    }
    return "?";
}

IfsSystem sierpinski_ifs() {
    IfsSystem sys;
    sys.name = "sierpinski";
    const double w = 1.0 / 3.0;
    sys.maps = {
        {0.5, 0.0, 0.0, 0.5, 0.0, 0.0, w},
        {0.5, 0.0, 0.0, 0.5, 0.5, 0.0, w},
        {0.5, 0.0, 0.0, 0.5, 0.25, 0.5, w},
    };
    return sys;
}

namespace {

// Random similarity system: m maps anchored near distinct quadrants, each a
// rotation (optionally a reflection) scaled by r_i. Mostly disjoint pieces,
// so the Moran root of the ratios is a usable theoretical label.
IfsSystem random_similarity_ifs(Rng& rng, int index) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const int m = 3 + static_cast<int>(rng.next_below(2));  // 3 or 4 maps
        static const double anchors[4][2] = {{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}};
        int order[4] = {0, 1, 2, 3};
        for (int i = 3; i > 0; --i) std::swap(order[i], order[rng.next_below(i + 1)]);

        IfsSystem sys;
        sys.name = "ifs_sim_" + std::to_string(index);
        std::vector<double> ratios;
        double wsum = 0.0;
        for (int i = 0; i < m; ++i) {
            const double r = rng.next_range(0.32, 0.58);
            const double th = rng.next_range(-0.45, 0.45);
            const double refl = rng.next_double() < 0.25 ? -1.0 : 1.0;
            AffineMap map;
            map.a = r * std::cos(th);
            map.b = -r * std::sin(th) * refl;
            map.c = r * std::sin(th);
            map.d = r * std::cos(th) * refl;
            map.e = anchors[order[i]][0] + rng.next_range(0.02, 0.2);
            map.f = anchors[order[i]][1] + rng.next_range(0.02, 0.2);
            map.weight = r * r;
            wsum += map.weight;
            ratios.push_back(r);
            sys.maps.push_back(map);
        }
        for (AffineMap& map : sys.maps) map.weight /= wsum;
        const double d = moran_dimension(ratios);
        if (d >= 1.0 && d <= 2.0) return sys;
    }
    throw numeric_error("could not draw a similarity IFS with dimension in [1,2]");
}

// General affine system (unequal axes, mild shear); no similarity ratios, so
// these get labelled by the box-counting oracle.
IfsSystem random_affine_ifs(Rng& rng, int index) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const int m = 3 + static_cast<int>(rng.next_below(2));
        static const double anchors[4][2] = {{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}};
        int order[4] = {0, 1, 2, 3};
        for (int i = 3; i > 0; --i) std::swap(order[i], order[rng.next_below(i + 1)]);

        IfsSystem sys;
        sys.name = "ifs_affine_" + std::to_string(index);
        double wsum = 0.0;
        bool ok = true;
        for (int i = 0; i < m; ++i) {
            AffineMap map;
            map.a = rng.next_range(0.25, 0.6);
            map.d = rng.next_range(0.25, 0.6);
            map.b = rng.next_range(-0.15, 0.15);
            map.c = rng.next_range(-0.15, 0.15);
            map.e = anchors[order[i]][0] + rng.next_range(0.02, 0.25);
            map.f = anchors[order[i]][1] + rng.next_range(0.02, 0.25);
            map.weight = std::abs(map.a * map.d - map.b * map.c);
            if (map.spectral_norm() >= 0.9) {
                ok = false;
                break;
            }
            wsum += map.weight;
            sys.maps.push_back(map);
        }
        if (ok && wsum > 0.0) {
            for (AffineMap& map : sys.maps) map.weight /= wsum;
            return sys;
        }
    }
    throw numeric_error("could not draw a contractive affine IFS");
}

// Stochastic subdivision: an occupied cell spawns each child with the level's
// survival probability, an empty cell stays empty. Dimension is controlled by
// the survival probabilities and read off with the box-counting oracle.
ImageGrid random_cascade_image(Rng& rng, int size, double p_survive) {
    const int base = 4;
    std::vector<std::uint8_t> level(static_cast<std::size_t>(base) * base);
    for (auto& c : level) c = rng.next_double() < 0.85 ? 1 : 0;
    int side = base;
    while (side * 4 <= size) {
        const int next_side = side * 4;
        std::vector<std::uint8_t> next(static_cast<std::size_t>(next_side) * next_side, 0);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const bool occ = level[static_cast<std::size_t>(y) * side + x] != 0;
                for (int cy = 0; cy < 4; ++cy)
                    for (int cx = 0; cx < 4; ++cx) {
                        const bool child = occ && rng.next_double() < p_survive;
                        if (child)
                            next[static_cast<std::size_t>(y * 4 + cy) * next_side + (x * 4 + cx)] =
                                1;
                    }
            }
        level.swap(next);
        side = next_side;
    }
    ImageGrid img(size, size);
    const int factor = size / side;  // power-of-two sizes leave an integer factor
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            img.at(x, y) =
                level[static_cast<std::size_t>(y / factor) * side + (x / factor)] ? 1.0 : 0.0;
    return img;
}

double box_label(const ImageGrid& img) {
    EstimatorConfig cfg;
    return box_counting(img, cfg).dimension;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string DatasetManifest::resolve(const ManifestEntry& e) const {
    return (fs::path(root_dir) / e.image_path).string();
}

DatasetManifest synth_dataset(const SynthSpec& spec, const std::string& out_dir,
                              std::uint64_t seed) {
    if (spec.counts.canonical < 0 || spec.counts.ifs < 0 || spec.counts.cascade < 0)
        throw config_error("family counts must be non-negative");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create " + out_dir);

    DatasetManifest manifest;
    manifest.root_dir = out_dir;
    int entry_index = 0;

    auto add_entry = [&](const ImageGrid& img, const std::string& family,
                         const std::string& params, double label, const std::string& source) {
        ManifestEntry e;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "%s_%04d", family.c_str(), entry_index);
        e.id = idbuf;
        e.image_path = e.id + ".pgm";
        e.family = family;
        e.parameters = params;
        e.hd_label = label;
        e.label_source = source;
        save_pgm(img, manifest.resolve(e));
        manifest.entries.push_back(std::move(e));
        ++entry_index;
    };

    static const CanonicalKind kinds[] = {CanonicalKind::sierpinski, CanonicalKind::koch_curve,
                                          CanonicalKind::cantor_dust, CanonicalKind::filled_square,
                                          CanonicalKind::line};
    for (int i = 0; i < spec.counts.canonical; ++i) {
        const CanonicalKind kind = kinds[i % 5];
        int depth = 4 + (i / 5) % 4;
        if (kind == CanonicalKind::koch_curve || kind == CanonicalKind::cantor_dust)
            depth = 3 + (i / 5) % 3;
        auto [img, dim] = canonical(kind, spec.image_size, depth);
        add_entry(img, "canonical", to_string(kind) + " depth=" + std::to_string(depth), dim,
                  "theoretical");
    }

    for (int i = 0; i < spec.counts.ifs; ++i) {
        Rng rng(mix_seed(seed, 0x1F5, static_cast<std::uint64_t>(i)));
        const bool similarity = (i % 2) == 0;
        if (similarity) {
            const IfsSystem sys = random_similarity_ifs(rng, i);
            std::vector<double> ratios;
            for (const AffineMap& m : sys.maps) ratios.push_back(m.spectral_norm());
            const ImageGrid img =
                chaos_game(sys, spec.chaos_points, spec.image_size, rng.next_u64());
            add_entry(img, "ifs", sys.name + " maps=" + std::to_string(sys.maps.size()),
                      moran_dimension(ratios), "theoretical");
        } else {
            const IfsSystem sys = random_affine_ifs(rng, i);
            const ImageGrid img =
                chaos_game(sys, spec.chaos_points, spec.image_size, rng.next_u64());
            add_entry(img, "ifs", sys.name + " maps=" + std::to_string(sys.maps.size()),
                      box_label(img), "box_counting");
        }
    }

    for (int i = 0; i < spec.counts.cascade; ++i) {
        Rng rng(mix_seed(seed, 0xCA5, static_cast<std::uint64_t>(i)));
        double p = rng.next_range(0.4, 1.0);
        ImageGrid img = random_cascade_image(rng, spec.image_size, p);
        int guard = 0;
        while (binarize(img, 0.5).count() == 0 && guard++ < 16)
            img = random_cascade_image(rng, spec.image_size, p = rng.next_range(0.6, 1.0));
        add_entry(img, "cascade", "p_survive=" + format_double(p), box_label(img),
                  "box_counting");
    }

    const std::string json = manifest_to_json(manifest);
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write manifest.json");
    out << json;
    return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    ordered_json root;
    root["entries"] = ordered_json::array();
    for (const ManifestEntry& e : manifest.entries) {
        ordered_json j;
        j["id"] = e.id;
        j["image_path"] = e.image_path;
        j["family"] = e.family;
        j["parameters"] = e.parameters;
        j["hd_label"] = e.hd_label;
        j["label_source"] = e.label_source;
        root["entries"].push_back(std::move(j));
    }
    return root.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text, const std::string& root_dir) {
    DatasetManifest manifest;
    manifest.root_dir = root_dir;
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedHeader(std::string("manifest parse error: ") + e.what());
    }
    for (const auto& j : root.at("entries")) {
        ManifestEntry e;
        e.id = j.at("id").get<std::string>();
        e.image_path = j.at("image_path").get<std::string>();
        e.family = j.at("family").get<std::string>();
        e.parameters = j.value("parameters", "");
        e.hd_label = j.at("hd_label").get<double>();
        e.label_source = j.at("label_source").get<std::string>();
        if (e.hd_label < 0.0 || e.hd_label > 2.0)
            throw MalformedHeader("hd_label out of [0,2] for " + e.id);
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return manifest_from_json(ss.str(), fs::path(path).parent_path().string());
}

}  // namespace fgmhd
