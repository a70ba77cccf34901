#include "fgmhd/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fgmhd/errors.hpp"

namespace fgmhd {

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

long parse_header_int(const std::string& tok) {
    if (tok.empty()) throw MalformedHeader("missing header field");
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw MalformedHeader("non-numeric header field: " + tok);
    return std::stol(tok);
}

}  // namespace

ImageGrid load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);

    if (next_token(in) != "P5") throw MalformedHeader(path + ": not a binary PGM (P5)");
    const long w = parse_header_int(next_token(in));
    const long h = parse_header_int(next_token(in));
    const long maxval = parse_header_int(next_token(in));
    if (w <= 0 || h <= 0 || w > 16384 || h > 16384)
        throw MalformedHeader(path + ": bad dimensions");
    if (maxval != 255) throw UnsupportedMaxval(path + ": maxval " + std::to_string(maxval));
    // next_token consumed the single whitespace byte after maxval

    ImageGrid img(static_cast<int>(w), static_cast<int>(h));
    std::vector<unsigned char> raw(img.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw TruncatedPayload(path + ": payload shorter than width*height");
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
    return img;
}

void save_pgm(const ImageGrid& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path + " for writing");
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> raw(image.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        // round half up for deterministic bytes
        double v = std::floor(image.pixels[i] * 255.0 + 0.5);
        if (v < 0.0) v = 0.0;
        if (v > 255.0) v = 255.0;
        raw[i] = static_cast<unsigned char>(v);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoFailure("write failed: " + path);
}

BinaryMask binarize(const ImageGrid& image, double threshold) {
    BinaryMask mask(image.width, image.height);
    for (std::size_t i = 0; i < image.size(); ++i)
        mask.bits[i] = image.pixels[i] > threshold ? 1 : 0;
    return mask;
}

ImageGrid to_image(const BinaryMask& mask) {
    ImageGrid img(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) img.pixels[i] = mask.bits[i] ? 1.0 : 0.0;
    return img;
}

ImageGrid resample_area(const ImageGrid& image, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ShapeMismatch("resample target must be at least 1x1");
    if (out_w == image.width && out_h == image.height) return image;

    ImageGrid out(out_w, out_h);
    const double sx = static_cast<double>(image.width) / out_w;
    const double sy = static_cast<double>(image.height) / out_h;

    for (int oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        const int iy0 = static_cast<int>(y0);
        const int iy1 = std::min(image.height - 1, static_cast<int>(std::ceil(y1)) - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            const int ix0 = static_cast<int>(x0);
            const int ix1 = std::min(image.width - 1, static_cast<int>(std::ceil(x1)) - 1);

            double acc = 0.0, wsum = 0.0;
            for (int iy = iy0; iy <= iy1; ++iy) {
                const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                for (int ix = ix0; ix <= ix1; ++ix) {
                    const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                    const double w = wx * wy;
                    acc += w * image.at(ix, iy);
                    wsum += w;
                }
            }
            out.at(ox, oy) = wsum > 0.0 ? acc / wsum : 0.0;
        }
    }
    return out;
}

double mean_intensity(const ImageGrid& image) {
    double sum = 0.0, comp = 0.0;
    for (double v : image.pixels) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return image.pixels.empty() ? 0.0 : sum / static_cast<double>(image.pixels.size());
}

}  // namespace fgmhd
