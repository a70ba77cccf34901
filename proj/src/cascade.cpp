#include "fgmhd/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fgmhd/errors.hpp"
#include "fgmhd/estimators.hpp"

namespace fgmhd {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// numerically stable -log p(bit | logit)
double bernoulli_nll(int bit, double z) {
    const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    return softplus - bit * z;
}

constexpr int kBase = 4;    // base grid side
constexpr int kBlock = 4;   // children per side at each refinement
constexpr int kSide1 = 16;  // level-1 grid side
constexpr int kSide2 = 64;  // level-2 grid side

}  // namespace

std::vector<double> CascadeParams::flatten() const {
    std::vector<double> v;
    v.reserve(kParamCount);
    v.insert(v.end(), level0_logits.begin(), level0_logits.end());
    for (const auto& level : level_rules)
        for (const auto& rule : level) v.insert(v.end(), rule.begin(), rule.end());
    return v;
}

void CascadeParams::unflatten(const std::vector<double>& v) {
    if (v.size() != kParamCount) throw ShapeMismatch("cascade parameter vector must have 80 values");
    std::size_t pos = 0;
    for (double& x : level0_logits) x = v[pos++];
    for (auto& level : level_rules)
        for (auto& rule : level)
            for (double& x : rule) x = v[pos++];
}

OrPyramid or_pyramid(const ImageGrid& image) {
    if (image.width != kSide2 || image.height != kSide2)
        throw ShapeMismatch("pyramid input must be 64x64");
    OrPyramid p;
    for (int y = 0; y < kSide2; ++y)
        for (int x = 0; x < kSide2; ++x)
            p.level2[y * kSide2 + x] = image.at(x, y) > 0.5 ? 1 : 0;
    for (int y = 0; y < kSide1; ++y)
        for (int x = 0; x < kSide1; ++x) {
            std::uint8_t any = 0;
            for (int cy = 0; cy < kBlock; ++cy)
                for (int cx = 0; cx < kBlock; ++cx)
                    any |= p.level2[(y * kBlock + cy) * kSide2 + (x * kBlock + cx)];
            p.level1[y * kSide1 + x] = any;
        }
    for (int y = 0; y < kBase; ++y)
        for (int x = 0; x < kBase; ++x) {
            std::uint8_t any = 0;
            for (int cy = 0; cy < kBlock; ++cy)
                for (int cx = 0; cx < kBlock; ++cx)
                    any |= p.level1[(y * kBlock + cy) * kSide1 + (x * kBlock + cx)];
            p.level0[y * kBase + x] = any;
        }
    return p;
}

ImageGrid cascade_generate(const CascadeParams& params, std::uint64_t seed) {
    Rng rng(seed);
    std::array<std::uint8_t, 16> grid0;
    for (int i = 0; i < 16; ++i)
        grid0[i] = rng.next_double() < sigmoid(params.level0_logits[i]) ? 1 : 0;

    std::array<std::uint8_t, 256> grid1;
    for (int py = 0; py < kBase; ++py)
        for (int px = 0; px < kBase; ++px) {
            const int state = grid0[py * kBase + px];
            const auto& rule = params.level_rules[0][state];
            for (int cy = 0; cy < kBlock; ++cy)
                for (int cx = 0; cx < kBlock; ++cx)
                    grid1[(py * kBlock + cy) * kSide1 + (px * kBlock + cx)] =
                        rng.next_double() < sigmoid(rule[cy * kBlock + cx]) ? 1 : 0;
        }

    ImageGrid img(kSide2, kSide2);
    for (int py = 0; py < kSide1; ++py)
        for (int px = 0; px < kSide1; ++px) {
            const int state = grid1[py * kSide1 + px];
            const auto& rule = params.level_rules[1][state];
            for (int cy = 0; cy < kBlock; ++cy)
                for (int cx = 0; cx < kBlock; ++cx)
                    img.at(px * kBlock + cx, py * kBlock + cy) =
                        rng.next_double() < sigmoid(rule[cy * kBlock + cx]) ? 1.0 : 0.0;
        }
    return img;
}

std::pair<double, std::vector<double>> gen_loss(const CascadeParams& params,
                                                const std::vector<ImageGrid>& references) {
    if (references.empty()) throw EmptyReferenceSet("gen_loss needs at least one reference");

    double loss = 0.0;
    std::vector<double> grad(CascadeParams::kParamCount, 0.0);
    // gradient slices in flatten() order: level0, then rules[l][s]
    auto rule_offset = [](int level, int state) { return 16 + (level * 2 + state) * 16; };

    for (const ImageGrid& ref : references) {
        const OrPyramid p = or_pyramid(ref);

        for (int i = 0; i < 16; ++i) {
            const double z = params.level0_logits[i];
            loss += bernoulli_nll(p.level0[i], z) / 16.0;
            grad[i] += (sigmoid(z) - p.level0[i]) / 16.0;
        }
        for (int py = 0; py < kBase; ++py)
            for (int px = 0; px < kBase; ++px) {
                const int state = p.level0[py * kBase + px];
                const auto& rule = params.level_rules[0][state];
                for (int cy = 0; cy < kBlock; ++cy)
                    for (int cx = 0; cx < kBlock; ++cx) {
                        const int child = cy * kBlock + cx;
                        const int bit = p.level1[(py * kBlock + cy) * kSide1 + (px * kBlock + cx)];
                        loss += bernoulli_nll(bit, rule[child]) / 256.0;
                        grad[rule_offset(0, state) + child] +=
                            (sigmoid(rule[child]) - bit) / 256.0;
                    }
            }
        for (int py = 0; py < kSide1; ++py)
            for (int px = 0; px < kSide1; ++px) {
                const int state = p.level1[py * kSide1 + px];
                const auto& rule = params.level_rules[1][state];
                for (int cy = 0; cy < kBlock; ++cy)
                    for (int cx = 0; cx < kBlock; ++cx) {
                        const int child = cy * kBlock + cx;
                        const int bit = p.level2[(py * kBlock + cy) * kSide2 + (px * kBlock + cx)];
                        loss += bernoulli_nll(bit, rule[child]) / 4096.0;
                        grad[rule_offset(1, state) + child] +=
                            (sigmoid(rule[child]) - bit) / 4096.0;
                    }
            }
    }

    const double inv_n = 1.0 / static_cast<double>(references.size());
    for (double& g : grad) g *= inv_n;
    return {loss * inv_n, std::move(grad)};
}

double estimate_sample(const ImageGrid& image, const HdProbe& probe) {
    if (probe.kind == HdEstimatorKind::regressor) {
        if (!probe.model) throw config_error("regressor probe needs a model");
        return std::clamp(predict(*probe.model, image), 0.0, 2.0);
    }
    try {
        return box_counting(image, EstimatorConfig{}).dimension;
    } catch (const EmptySet&) {
        return 0.0;  // structureless sample counts with dimension 0
    }
}

HdLossResult hd_loss(const CascadeParams& params, double hd_target, int n_samples,
                     const HdProbe& probe, std::uint64_t seed) {
    if (n_samples < 1) throw config_error("hd_loss needs n_samples >= 1");
    HdLossResult r;
    for (int i = 0; i < n_samples; ++i) {
        const ImageGrid img =
            cascade_generate(params, mix_seed(seed, 0x5A11, static_cast<std::uint64_t>(i)));
        const double est = estimate_sample(img, probe);
        r.loss += std::abs(est - hd_target);
        r.mean_hd += est;
    }
    r.loss /= n_samples;
    r.mean_hd /= n_samples;
    return r;
}

std::map<std::string, double> compute_hd_targets(const DatasetManifest& manifest) {
    if (manifest.entries.empty()) throw EmptyFamily("manifest has no entries");
    std::map<std::string, std::vector<double>> by_family;
    for (const ManifestEntry& e : manifest.entries) by_family[e.family].push_back(e.hd_label);

    std::map<std::string, double> targets;
    for (auto& [family, labels] : by_family) {
        if (labels.empty()) throw EmptyFamily("family " + family + " has no entries");
        std::sort(labels.begin(), labels.end());
        targets[family] = labels[(labels.size() - 1) / 2];  // lower median
    }
    return targets;
}

std::vector<double> spsa_gradient(const std::function<double(const std::vector<double>&)>& f,
                                  const std::vector<double>& theta, double c, Rng& rng) {
    const std::size_t n = theta.size();
    std::vector<double> delta(n);
    for (double& d : delta) d = rng.next_sign();

    std::vector<double> plus = theta, minus = theta;
    for (std::size_t i = 0; i < n; ++i) {
        plus[i] += c * delta[i];
        minus[i] -= c * delta[i];
    }
    const double df = (f(plus) - f(minus)) / (2.0 * c);
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) grad[i] = df * delta[i];  // delta_i = +-1
    return grad;
}

ToyTrainResult train_toy(const ToyTrainConfig& config, std::uint64_t seed) {
    if (config.epochs < 1) throw config_error("train_toy needs epochs >= 1");
    if (config.references.empty()) throw EmptyReferenceSet("train_toy needs references");

    // 20% holdout by index hash, forced non-empty on both sides
    std::vector<ImageGrid> train_refs, holdout_refs;
    for (std::size_t i = 0; i < config.references.size(); ++i) {
        if (mix_seed(0x9D5, i) % 5 == 0)
            holdout_refs.push_back(config.references[i]);
        else
            train_refs.push_back(config.references[i]);
    }
    if (train_refs.empty()) train_refs.push_back(config.references.front());
    if (holdout_refs.empty()) holdout_refs.push_back(config.references.back());

    ToyTrainResult result;
    CascadeParams& params = result.params;
    std::vector<double> theta = params.flatten();

    SchedulerState sched;
    MmdsConfig mmds_cfg = config.mmds;
    mmds_cfg.epochs = config.epochs;
    const ExpScheduleConfig exp_cfg{std::max(1, config.epochs - 1), config.exp_lambda_final,
                                    config.exp_rate};

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        params.unflatten(theta);
        auto [l_gen, grad_gen] = gen_loss(params, train_refs);

        const std::uint64_t hd_seed = mix_seed(seed, 0x4D, static_cast<std::uint64_t>(epoch));
        const HdLossResult hd = hd_loss(params, config.hd_target, config.n_hd_samples,
                                        config.probe, hd_seed);

        // schedule update sees the pre-update weight
        const double l_gen_holdout = gen_loss(params, holdout_refs).first;
        const double l_val = l_gen_holdout + sched.lambda * hd.loss;

        double lambda = 0.0, momentum_value = 0.0;
        switch (config.schedule) {
            case ScheduleKind::mmds:
                sched = mmds_step(sched, l_val, mmds_cfg);
                lambda = sched.lambda;
                momentum_value = sched.m;
                break;
            case ScheduleKind::exp:
                lambda = exp_lambda(std::min(epoch, exp_cfg.epochs), exp_cfg);
                break;
            case ScheduleKind::none:
                break;
        }

        HybridLossRecord rec;
        rec.epoch = epoch;
        rec.lambda = lambda;
        rec.m = momentum_value;
        rec.l_gen = l_gen;
        rec.l_hd = hd.loss;
        rec.l_total = l_gen + lambda * hd.loss;
        rec.l_val = l_val;
        rec.mean_hd_gen = hd.mean_hd;
        rec.hd_target = config.hd_target;
        result.records.push_back(rec);

        std::vector<double> grad_hd(theta.size(), 0.0);
        if (lambda > 0.0) {
            Rng dir_rng(mix_seed(seed, 0x59A, static_cast<std::uint64_t>(epoch)));
            grad_hd = spsa_gradient(
                [&](const std::vector<double>& t) {
                    CascadeParams probe_params;
                    probe_params.unflatten(t);
                    return hd_loss(probe_params, config.hd_target, config.n_hd_samples,
                                   config.probe, hd_seed)
                        .loss;
                },
                theta, config.spsa.perturb, dir_rng);
        }

        const double step = config.spsa.step / (1.0 + config.spsa.decay * epoch);
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] -= step * (grad_gen[i] + lambda * grad_hd[i]);
    }

    params.unflatten(theta);
    return result;
}

std::string cascade_params_to_json(const CascadeParams& params) {
    nlohmann::ordered_json j;
    j["level0_logits"] = params.level0_logits;
    j["level_rules"] = params.level_rules;
    return j.dump(2) + "\n";
}

CascadeParams cascade_params_from_json(const std::string& text) {
    CascadeParams params;
    try {
        const auto j = nlohmann::ordered_json::parse(text);
        const auto l0 = j.at("level0_logits").get<std::vector<double>>();
        if (l0.size() != 16) throw ShapeMismatch("level0_logits must have 16 entries");
        std::copy(l0.begin(), l0.end(), params.level0_logits.begin());
        const auto rules = j.at("level_rules");
        for (int l = 0; l < 2; ++l)
            for (int s = 0; s < 2; ++s) {
                const auto r = rules.at(l).at(s).get<std::vector<double>>();
                if (r.size() != 16) throw ShapeMismatch("rule must have 16 entries");
                std::copy(r.begin(), r.end(), params.level_rules[l][s].begin());
            }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedHeader(std::string("cascade params parse error: ") + e.what());
    }
    return params;
}

CascadeParams load_cascade_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return cascade_params_from_json(ss.str());
}

std::vector<ImageGrid> default_toy_references(int count, std::uint64_t seed) {
    if (count < 1) throw config_error("need at least one reference");
    std::vector<ImageGrid> refs;
    const auto [gasket, dim] = canonical(CanonicalKind::sierpinski, 64, 6);
    (void)dim;
    for (int i = 0; i < count; ++i) {
        if (i % 2 == 0) {
            refs.push_back(gasket);
        } else {
            const ImageGrid noisy = chaos_game(sierpinski_ifs(), 30000, 64,
                                               mix_seed(seed, 0xEF, static_cast<std::uint64_t>(i)));
            refs.push_back(noisy);
        }
    }
    return refs;
}

}  // namespace fgmhd
