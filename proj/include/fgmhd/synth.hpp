#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fgmhd/image.hpp"

namespace fgmhd {

/// One contractive affine map x' = [[a,b],[c,d]]x + (e,f) on the unit square,
/// picked with probability `weight` during the chaos game.
struct AffineMap {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    double e = 0.0, f = 0.0;
    double weight = 0.0;

    // largest singular value of the linear part
    double spectral_norm() const;
};

struct IfsSystem {
    std::vector<AffineMap> maps;
    std::string name;
};

enum class CanonicalKind { sierpinski, koch_curve, cantor_dust, filled_square, line };

struct ManifestEntry {
    std::string id;
    std::string image_path;       // relative to the manifest's directory
    std::string family;           // canonical | ifs | cascade
    std::string parameters;       // human-readable parameter summary
    double hd_label = 0.0;        // in [0,2]
    std::string label_source;     // theoretical | box_counting
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::string root_dir;  // directory the image paths are relative to

    std::string resolve(const ManifestEntry& e) const;
};

struct FamilyCounts {
    int canonical = 0;
    int ifs = 0;
    int cascade = 0;
};

struct SynthSpec {
    FamilyCounts counts;
    int image_size = 256;         // raster side, power of two
    int chaos_points = 200000;    // chaos game iterations per IFS image
};

// Unique root D of sum(r_i^D) = 1 over contraction ratios in (0,1),
// located by bisection to |residual| < 1e-12.
double moran_dimension(const std::vector<double>& ratios);

// Renders an IFS attractor: iterate from (0.5, 0.5), drop 100 burn-in steps,
// then mark n_points visited pixels. Maps are chosen by cumulative weight in
// listed order, so equal seeds give identical rasters.
ImageGrid chaos_game(const IfsSystem& ifs, std::int64_t n_points, int size, std::uint64_t seed);

// Deterministic rasterization of a classic construction together with its
// analytic dimension.
std::pair<ImageGrid, double> canonical(CanonicalKind kind, int size, int depth);

CanonicalKind canonical_kind_from_string(const std::string& name);
std::string to_string(CanonicalKind kind);

// Writes PGM images plus manifest.json under out_dir and returns the manifest.
DatasetManifest synth_dataset(const SynthSpec& spec, const std::string& out_dir,
                              std::uint64_t seed);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text, const std::string& root_dir);
DatasetManifest load_manifest(const std::string& path);

// The classic three-map Sierpinski system, used by tests and as a reference
// generator preset.
IfsSystem sierpinski_ifs();

}  // namespace fgmhd
