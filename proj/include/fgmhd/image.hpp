#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fgmhd {

/// Grayscale raster with row-major intensities in [0,1]. The shared carrier
/// for every generated or loaded image in the toolkit.
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // size == width*height

    ImageGrid() = default;
    ImageGrid(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return pixels.size(); }
};

/// Occupancy view of an image: 0/1 per pixel, row-major.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const;
};

// Binary PGM (P5, maxval 255) is the only on-disk raster format.
// save_pgm emits exactly "P5\n<w> <h>\n255\n" followed by round-half-up
// bytes so fixtures are reproducible bit for bit.
ImageGrid load_pgm(const std::string& path);
void save_pgm(const ImageGrid& image, const std::string& path);

// bit = 1 iff intensity > threshold
BinaryMask binarize(const ImageGrid& image, double threshold);

// mask as a 0/1-valued image
ImageGrid to_image(const BinaryMask& mask);

// Area-weighted resampling: each output pixel averages the input region it
// covers. Preserves global mean intensity for integer factors.
ImageGrid resample_area(const ImageGrid& image, int out_w, int out_h);

// Compensated (Kahan) mean, stable enough to verify the resampling
// mean-preservation contract at 1e-12.
double mean_intensity(const ImageGrid& image);

}  // namespace fgmhd
