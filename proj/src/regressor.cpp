#include "fgmhd/regressor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fgmhd/errors.hpp"
#include "fgmhd/rng.hpp"

namespace fgmhd {

namespace {

struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_) {}
    double* plane(int ch) { return v.data() + static_cast<std::size_t>(ch) * h * w; }
    const double* plane(int ch) const { return v.data() + static_cast<std::size_t>(ch) * h * w; }
};

int conv_out_dim(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

Tensor conv_forward(const ConvLayer& layer, const Tensor& in) {
    const ConvSpec& s = layer.spec;
    Tensor out(s.out_ch, conv_out_dim(in.h, s.k, s.stride, s.pad),
               conv_out_dim(in.w, s.k, s.stride, s.pad));

    for (int oc = 0; oc < s.out_ch; ++oc) {
        double* op = out.plane(oc);
        std::fill(op, op + static_cast<std::size_t>(out.h) * out.w, layer.b[oc]);
        for (int ic = 0; ic < s.in_ch; ++ic) {
            const double* ip = in.plane(ic);
            const double* wk =
                layer.w.data() + (static_cast<std::size_t>(oc) * s.in_ch + ic) * s.k * s.k;
            for (int ky = 0; ky < s.k; ++ky) {
                for (int kx = 0; kx < s.k; ++kx) {
                    const double wv = wk[ky * s.k + kx];
                    for (int oy = 0; oy < out.h; ++oy) {
                        const int iy = oy * s.stride + ky - s.pad;
                        if (iy < 0 || iy >= in.h) continue;
                        // restrict ox to the in-bounds input column range
                        int ox0 = 0, ox1 = out.w;
                        while (ox0 < ox1 && ox0 * s.stride + kx - s.pad < 0) ++ox0;
                        while (ox1 > ox0 && (ox1 - 1) * s.stride + kx - s.pad >= in.w) --ox1;
                        const double* irow = ip + static_cast<std::size_t>(iy) * in.w;
                        double* orow = op + static_cast<std::size_t>(oy) * out.w;
                        const int base = kx - s.pad;
                        for (int ox = ox0; ox < ox1; ++ox)
                            orow[ox] += wv * irow[ox * s.stride + base];
                    }
                }
            }
        }
    }
    return out;
}

void relu_inplace(Tensor& t) {
    for (double& x : t.v)
        if (x < 0.0) x = 0.0;
}

// d_out is masked in place by the activation, then folded into the weight,
// bias and (optionally) input gradients.
void conv_backward(const ConvLayer& layer, const Tensor& in, const Tensor& activated,
                   Tensor& d_out, double* d_w, double* d_b, Tensor* d_in) {
    const ConvSpec& s = layer.spec;
    for (std::size_t i = 0; i < d_out.v.size(); ++i)
        if (activated.v[i] <= 0.0) d_out.v[i] = 0.0;

    for (int oc = 0; oc < s.out_ch; ++oc) {
        const double* dop = d_out.plane(oc);
        double acc = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(d_out.h) * d_out.w; ++i)
            acc += dop[i];
        d_b[oc] += acc;

        for (int ic = 0; ic < s.in_ch; ++ic) {
            const double* ip = in.plane(ic);
            double* dip = d_in ? d_in->plane(ic) : nullptr;
            const double* wk =
                layer.w.data() + (static_cast<std::size_t>(oc) * s.in_ch + ic) * s.k * s.k;
            double* dwk = d_w + (static_cast<std::size_t>(oc) * s.in_ch + ic) * s.k * s.k;
            for (int ky = 0; ky < s.k; ++ky) {
                for (int kx = 0; kx < s.k; ++kx) {
                    const double wv = wk[ky * s.k + kx];
                    double wgrad = 0.0;
                    const int base = kx - s.pad;
                    for (int oy = 0; oy < d_out.h; ++oy) {
                        const int iy = oy * s.stride + ky - s.pad;
                        if (iy < 0 || iy >= in.h) continue;
                        int ox0 = 0, ox1 = d_out.w;
                        while (ox0 < ox1 && ox0 * s.stride + base < 0) ++ox0;
                        while (ox1 > ox0 && (ox1 - 1) * s.stride + base >= in.w) --ox1;
                        const double* irow = ip + static_cast<std::size_t>(iy) * in.w;
                        const double* dorow = dop + static_cast<std::size_t>(oy) * d_out.w;
                        if (dip) {
                            double* dirow = dip + static_cast<std::size_t>(iy) * in.w;
                            for (int ox = ox0; ox < ox1; ++ox) {
                                const int ix = ox * s.stride + base;
                                wgrad += dorow[ox] * irow[ix];
                                dirow[ix] += wv * dorow[ox];
                            }
                        } else {
                            for (int ox = ox0; ox < ox1; ++ox)
                                wgrad += dorow[ox] * irow[ox * s.stride + base];
                        }
                    }
                    dwk[ky * s.k + kx] += wgrad;
                }
            }
        }
    }
}

Tensor image_tensor(const ImageGrid& image) {
    if (image.width != kRegressorInput || image.height != kRegressorInput)
        throw ShapeMismatch("regressor input must be 64x64");
    Tensor t(1, image.height, image.width);
    t.v = image.pixels;
    return t;
}

struct ForwardTrace {
    Tensor input, a1, a2;
    std::vector<Tensor> branch_out;
    std::vector<double> pooled;
    double output = 0.0;
};

ForwardTrace run_forward(const RegressorModel& model, const ImageGrid& image) {
    ForwardTrace tr;
    tr.input = image_tensor(image);
    tr.a1 = conv_forward(model.stem1, tr.input);
    relu_inplace(tr.a1);
    tr.a2 = conv_forward(model.stem2, tr.a1);
    relu_inplace(tr.a2);

    tr.pooled.reserve(model.branches.size() * 16);
    for (const ConvLayer& br : model.branches) {
        Tensor bo = conv_forward(br, tr.a2);
        relu_inplace(bo);
        const double inv_area = 1.0 / (static_cast<double>(bo.h) * bo.w);
        for (int ch = 0; ch < bo.c; ++ch) {
            const double* p = bo.plane(ch);
            double acc = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(bo.h) * bo.w; ++i) acc += p[i];
            tr.pooled.push_back(acc * inv_area);
        }
        tr.branch_out.push_back(std::move(bo));
    }

    if (static_cast<int>(tr.pooled.size()) != model.head.in)
        throw ShapeMismatch("head width does not match pooled features");
    double y = model.head.b[0];
    for (int i = 0; i < model.head.in; ++i) y += model.head.w[i] * tr.pooled[i];
    tr.output = y;
    return tr;
}

}  // namespace

std::size_t RegressorModel::param_count() const {
    std::size_t n = stem1.spec.weight_count() + stem1.b.size() + stem2.spec.weight_count() +
                    stem2.b.size();
    for (const ConvLayer& br : branches) n += br.spec.weight_count() + br.b.size();
    n += head.w.size() + head.b.size();
    return n;
}

std::vector<double> RegressorModel::flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    auto push = [&](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); };
    push(stem1.w);
    push(stem1.b);
    push(stem2.w);
    push(stem2.b);
    for (const ConvLayer& br : branches) {
        push(br.w);
        push(br.b);
    }
    push(head.w);
    push(head.b);
    return out;
}

void RegressorModel::unflatten(const std::vector<double>& params) {
    if (params.size() != param_count()) throw ShapeMismatch("parameter vector length mismatch");
    std::size_t pos = 0;
    auto pull = [&](std::vector<double>& v) {
        std::copy(params.begin() + pos, params.begin() + pos + v.size(), v.begin());
        pos += v.size();
    };
    pull(stem1.w);
    pull(stem1.b);
    pull(stem2.w);
    pull(stem2.b);
    for (ConvLayer& br : branches) {
        pull(br.w);
        pull(br.b);
    }
    pull(head.w);
    pull(head.b);
}

RegressorModel make_model(const std::vector<int>& kernels) {
    if (kernels.empty()) throw config_error("need at least one branch kernel");
    RegressorModel m;
    m.kernels = kernels;
    m.stem1.spec = {1, 8, 3, 2, 1};
    m.stem2.spec = {8, 16, 3, 2, 1};
    for (int k : kernels) {
        if (k < 1 || k % 2 == 0) throw config_error("branch kernels must be odd");
        ConvLayer br;
        br.spec = {16, 16, k, 1, (k - 1) / 2};
        m.branches.push_back(std::move(br));
    }
    m.head.in = 16 * static_cast<int>(kernels.size());
    m.head.out = 1;

    auto alloc = [](ConvLayer& l) {
        l.w.assign(l.spec.weight_count(), 0.0);
        l.b.assign(static_cast<std::size_t>(l.spec.out_ch), 0.0);
    };
    alloc(m.stem1);
    alloc(m.stem2);
    for (ConvLayer& br : m.branches) alloc(br);
    m.head.w.assign(static_cast<std::size_t>(m.head.in), 0.0);
    m.head.b.assign(1, 0.0);
    return m;
}

RegressorModel init_model(std::uint64_t seed, const std::vector<int>& kernels) {
    RegressorModel m = make_model(kernels);
    Rng rng(seed);
    auto fill = [&](std::vector<double>& v, int fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& x : v) {
            const double u = rng.next_range(-s, s);
            x = std::clamp(static_cast<double>(static_cast<float>(u)), -s, s);
        }
    };
    auto fill_conv = [&](ConvLayer& l) {
        const int fan_in = l.spec.in_ch * l.spec.k * l.spec.k;
        fill(l.w, fan_in);
        fill(l.b, fan_in);
    };
    fill_conv(m.stem1);
    fill_conv(m.stem2);
    for (ConvLayer& br : m.branches) fill_conv(br);
    fill(m.head.w, m.head.in);
    fill(m.head.b, m.head.in);
    return m;
}

double forward(const RegressorModel& model, const ImageGrid& image) {
    return run_forward(model, image).output;
}

std::uint64_t activation_signature(const RegressorModel& model, const ImageGrid& image) {
    const ForwardTrace tr = run_forward(model, image);
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto mix = [&h](const Tensor& t) {
        for (std::size_t i = 0; i < t.v.size(); ++i) {
            if (t.v[i] > 0.0) h ^= (i + 0x9E37u);
            h *= 0x00000100000001B3ull;
        }
    };
    mix(tr.a1);
    mix(tr.a2);
    for (const Tensor& b : tr.branch_out) mix(b);
    return h;
}

double predict(const RegressorModel& model, const ImageGrid& image) {
    if (image.width == kRegressorInput && image.height == kRegressorInput)
        return forward(model, image);
    return forward(model, resample_area(image, kRegressorInput, kRegressorInput));
}

std::pair<double, std::vector<double>> loss_and_gradient(const RegressorModel& model,
                                                         const ImageGrid& image, double target) {
    ForwardTrace tr = run_forward(model, image);
    const double diff = tr.output - target;
    const double loss = diff * diff;
    const double dy = 2.0 * diff;

    std::vector<double> grad(model.param_count(), 0.0);
    // gradient slices in flatten() order
    std::size_t pos = 0;
    double* g_stem1_w = grad.data() + pos;
    pos += model.stem1.w.size();
    double* g_stem1_b = grad.data() + pos;
    pos += model.stem1.b.size();
    double* g_stem2_w = grad.data() + pos;
    pos += model.stem2.w.size();
    double* g_stem2_b = grad.data() + pos;
    pos += model.stem2.b.size();
    std::vector<std::pair<double*, double*>> g_branches;
    for (const ConvLayer& br : model.branches) {
        double* gw = grad.data() + pos;
        pos += br.w.size();
        double* gb = grad.data() + pos;
        pos += br.b.size();
        g_branches.emplace_back(gw, gb);
    }
    double* g_head_w = grad.data() + pos;
    pos += model.head.w.size();
    double* g_head_b = grad.data() + pos;

    g_head_b[0] = dy;
    for (int i = 0; i < model.head.in; ++i) g_head_w[i] = dy * tr.pooled[i];

    Tensor d_a2(tr.a2.c, tr.a2.h, tr.a2.w);
    for (std::size_t bi = 0; bi < model.branches.size(); ++bi) {
        const Tensor& bo = tr.branch_out[bi];
        Tensor d_bo(bo.c, bo.h, bo.w);
        const double inv_area = 1.0 / (static_cast<double>(bo.h) * bo.w);
        for (int ch = 0; ch < bo.c; ++ch) {
            const double dpool = dy * model.head.w[bi * 16 + ch] * inv_area;
            double* p = d_bo.plane(ch);
            std::fill(p, p + static_cast<std::size_t>(bo.h) * bo.w, dpool);
        }
        conv_backward(model.branches[bi], tr.a2, bo, d_bo, g_branches[bi].first,
                      g_branches[bi].second, &d_a2);
    }

    Tensor d_a1(tr.a1.c, tr.a1.h, tr.a1.w);
    conv_backward(model.stem2, tr.a1, tr.a2, d_a2, g_stem2_w, g_stem2_b, &d_a1);
    conv_backward(model.stem1, tr.input, tr.a1, d_a1, g_stem1_w, g_stem1_b, nullptr);

    return {loss, std::move(grad)};
}

std::vector<RegressionSample> load_samples(const DatasetManifest& manifest) {
    std::vector<RegressionSample> samples;
    samples.reserve(manifest.entries.size());
    for (const ManifestEntry& e : manifest.entries) {
        RegressionSample s;
        s.id = e.id;
        s.image = resample_area(load_pgm(manifest.resolve(e)), kRegressorInput, kRegressorInput);
        s.label = e.hd_label;
        samples.push_back(std::move(s));
    }
    return samples;
}

TrainReport train_on_samples(RegressorModel& model, const std::vector<RegressionSample>& samples,
                             const TrainHyper& hyper, std::uint64_t seed) {
    if (samples.empty()) throw EmptyDataset("no training samples");
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::size_t> train_idx, holdout_idx;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (fnv1a(samples[i].id.data(), samples[i].id.size()) % 5 == 0)
            holdout_idx.push_back(i);
        else
            train_idx.push_back(i);
    }
    if (train_idx.empty()) train_idx.swap(holdout_idx);
    if (holdout_idx.empty()) holdout_idx.push_back(train_idx.back());

    TrainReport report;
    std::vector<double> params = model.flatten();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> batch_grad(params.size(), 0.0);
    std::vector<std::size_t> order = train_idx;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        Rng rng(mix_seed(seed, 0x7E41, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(hyper.batch)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const RegressionSample& s = samples[order[i]];
                auto [loss, grad] = loss_and_gradient(model, s.image, s.label);
                batch_loss += loss;
                for (std::size_t p = 0; p < grad.size(); ++p) batch_grad[p] += grad[p];
            }
            const double inv_n = 1.0 / static_cast<double>(end - start);
            epoch_loss += batch_loss;
            for (std::size_t p = 0; p < params.size(); ++p) {
                velocity[p] = hyper.momentum * velocity[p] + batch_grad[p] * inv_n;
                params[p] -= hyper.lr * velocity[p];
            }
            model.unflatten(params);
        }
        report.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
    }

    report.epochs_run = hyper.epochs;
    report.train_mse = report.loss_curve.empty() ? 0.0 : report.loss_curve.back();
    double mae = 0.0;
    for (std::size_t i : holdout_idx)
        mae += std::abs(forward(model, samples[i].image) - samples[i].label);
    report.holdout_mae = mae / static_cast<double>(holdout_idx.size());
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

TrainReport train(RegressorModel& model, const DatasetManifest& manifest, const TrainHyper& hyper,
                  std::uint64_t seed) {
    if (manifest.entries.empty()) throw EmptyDataset("manifest has no entries");
    return train_on_samples(model, load_samples(manifest), hyper, seed);
}

namespace {

void write_f32_le(std::ostream& out, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(bits & 0xFF), static_cast<unsigned char>((bits >> 8) & 0xFF),
        static_cast<unsigned char>((bits >> 16) & 0xFF),
        static_cast<unsigned char>((bits >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

double read_f32_le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) throw TruncatedPayload("weight payload ended early");
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                               (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

}  // namespace

void save_weights(const RegressorModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path + " for writing");
    out << "FGMHD-W v1\n";
    auto shape_line = [&](const ConvLayer& l) {
        out << "conv " << l.spec.in_ch << " " << l.spec.out_ch << " " << l.spec.k << " "
            << l.spec.stride << " " << l.spec.pad << "\n";
    };
    shape_line(model.stem1);
    shape_line(model.stem2);
    for (const ConvLayer& br : model.branches) shape_line(br);
    out << "affine " << model.head.in << " " << model.head.out << "\n";
    out << "\n";
    for (double v : model.flatten()) write_f32_le(out, v);
    if (!out) throw IoFailure("write failed: " + path);
}

RegressorModel load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line != "FGMHD-W v1")
        throw VersionMismatch("expected weight header 'FGMHD-W v1', got '" + line + "'");

    std::vector<ConvSpec> convs;
    int affine_in = -1, affine_out = -1;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "conv") {
            ConvSpec s;
            ls >> s.in_ch >> s.out_ch >> s.k >> s.stride >> s.pad;
            if (!ls || s.in_ch < 1 || s.out_ch < 1 || s.k < 1 || s.stride < 1 || s.pad < 0)
                throw ShapeMismatch("bad conv shape line: " + line);
            convs.push_back(s);
        } else if (kind == "affine") {
            ls >> affine_in >> affine_out;
            if (!ls || affine_in < 1 || affine_out != 1)
                throw ShapeMismatch("bad affine shape line: " + line);
        } else {
            throw ShapeMismatch("unknown layer kind: " + kind);
        }
    }
    if (convs.size() < 3 || affine_in < 0)
        throw ShapeMismatch("weight file needs two stems, >=1 branch and a head");

    std::vector<int> kernels;
    for (std::size_t i = 2; i < convs.size(); ++i) kernels.push_back(convs[i].k);
    RegressorModel model = make_model(kernels);
    auto same = [](const ConvSpec& a, const ConvSpec& b) {
        return a.in_ch == b.in_ch && a.out_ch == b.out_ch && a.k == b.k && a.stride == b.stride &&
               a.pad == b.pad;
    };
    if (!same(convs[0], model.stem1.spec) || !same(convs[1], model.stem2.spec))
        throw ShapeMismatch("stem shapes do not match the architecture");
    for (std::size_t i = 0; i < kernels.size(); ++i)
        if (!same(convs[i + 2], model.branches[i].spec))
            throw ShapeMismatch("branch shapes do not match the architecture");
    if (affine_in != model.head.in) throw ShapeMismatch("head width mismatch");

    std::vector<double> params(model.param_count());
    for (double& v : params) v = read_f32_le(in);
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1)
        throw ShapeMismatch("trailing bytes after weight payload");
    model.unflatten(params);
    return model;
}

std::vector<AblationRow> kernel_ablation(const DatasetManifest& manifest,
                                         const std::vector<std::vector<int>>& kernel_sets,
                                         const TrainHyper& hyper, std::uint64_t seed) {
    if (manifest.entries.empty()) throw EmptyDataset("manifest has no entries");
    const std::vector<RegressionSample> samples = load_samples(manifest);
    std::vector<const RegressionSample*> holdout;
    for (const RegressionSample& s : samples)
        if (fnv1a(s.id.data(), s.id.size()) % 5 == 0) holdout.push_back(&s);
    if (holdout.empty()) holdout.push_back(&samples.back());

    std::vector<AblationRow> rows;
    for (const std::vector<int>& kernels : kernel_sets) {
        if (kernels.empty()) throw config_error("empty kernel subset");
        RegressorModel model = init_model(seed, kernels);
        train_on_samples(model, samples, hyper, seed);

        // holdout MSE, matching the training objective
        double mse = 0.0;
        const auto t0 = std::chrono::steady_clock::now();
        for (const RegressionSample* s : holdout) {
            const double d = forward(model, s->image) - s->label;
            mse += d * d;
        }
        const double elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();

        AblationRow row;
        std::string label;
        for (std::size_t i = 0; i < kernels.size(); ++i)
            label += (i ? "+" : "") + std::to_string(kernels[i]);
        row.kernels = label;
        row.holdout_loss = mse / static_cast<double>(holdout.size());
        row.infer_ms = elapsed_ms / static_cast<double>(holdout.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fgmhd
