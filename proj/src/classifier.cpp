#include "stegolab/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>

#include "stegolab/rng.hpp"

namespace stegolab {

namespace detail {
std::atomic<long> gradient_eval_count{0};
}

namespace {

constexpr int kC1 = 8;   // conv1 output channels
constexpr int kC2 = 16;  // conv2 output channels
constexpr int kK1 = 5;
constexpr int kK2 = 3;
constexpr int kClasses = 2;

// 5x5 KV high-pass preprocessing kernel (times 1/12).
constexpr double kKV[25] = {
    -1, 2,  -2,  2,  -1, //
    2,  -6, 8,   -6, 2,  //
    -2, 8,  -12, 8,  -2, //
    2,  -6, 8,   -6, 2,  //
    -1, 2,  -2,  2,  -1,
};

// same-size correlation with zero padding, single channel; kernel-outer
// loops keep the inner row accumulation contiguous
void conv_same(const Grid& in, const double* k, int ksize, Grid& out, double bias = 0.0) {
    const int w = in.width, h = in.height, half = ksize / 2;
    std::fill(out.v.begin(), out.v.end(), bias);
    for (int u = 0; u < ksize; ++u) {
        const int dy = u - half;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int v = 0; v < ksize; ++v) {
            const double kv = k[u * ksize + v];
            if (kv == 0.0) continue;
            const int dx = v - half;
            const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
            for (int y = y0; y < y1; ++y) {
                double* orow = out.v.data() + static_cast<std::size_t>(y) * w;
                const double* irow = in.v.data() + static_cast<std::size_t>(y + dy) * w;
                for (int x = x0; x < x1; ++x) orow[x] += kv * irow[x + dx];
            }
        }
    }
}

// transpose of conv_same: scatters dOut through the kernel back to dIn
void conv_same_transpose(const Grid& dout, const double* k, int ksize, Grid& din) {
    const int w = dout.width, h = dout.height, half = ksize / 2;
    for (int u = 0; u < ksize; ++u) {
        const int dy = u - half;
        const int y0 = std::max(0, dy), y1 = std::min(h, h + dy);
        for (int v = 0; v < ksize; ++v) {
            const double kv = k[u * ksize + v];
            if (kv == 0.0) continue;
            const int dx = v - half;
            const int x0 = std::max(0, dx), x1 = std::min(w, w + dx);
            for (int y = y0; y < y1; ++y) {
                double* drow = din.v.data() + static_cast<std::size_t>(y) * w;
                const double* grow = dout.v.data() + static_cast<std::size_t>(y - dy) * w;
                for (int x = x0; x < x1; ++x) drow[x] += kv * grow[x - dx];
            }
        }
    }
}

// kernel gradient of conv_same: dK[u][v] += sum dOut(y,x) * in(y+u-h, x+v-h)
void conv_same_kernel_grad(const Grid& in, const Grid& dout, int ksize, double* dk) {
    const int w = in.width, h = in.height, half = ksize / 2;
    for (int u = 0; u < ksize; ++u) {
        const int dy = u - half;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int v = 0; v < ksize; ++v) {
            const int dx = v - half;
            const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
            double s = 0;
            for (int y = y0; y < y1; ++y) {
                const double* grow = dout.v.data() + static_cast<std::size_t>(y) * w;
                const double* irow = in.v.data() + static_cast<std::size_t>(y + dy) * w;
                for (int x = x0; x < x1; ++x) s += grow[x] * irow[x + dx];
            }
            dk[u * ksize + v] += s;
        }
    }
}

Grid mean_pool2(const Grid& in) {
    Grid out(in.width / 2, in.height / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(y, x) = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) +
                                   in.at(2 * y + 1, 2 * x) + in.at(2 * y + 1, 2 * x + 1));
    return out;
}

void mean_pool2_backward(const Grid& dout, Grid& din) {
    for (int y = 0; y < dout.height; ++y)
        for (int x = 0; x < dout.width; ++x) {
            const double g = 0.25 * dout.at(y, x);
            din.at(2 * y, 2 * x) += g;
            din.at(2 * y, 2 * x + 1) += g;
            din.at(2 * y + 1, 2 * x) += g;
            din.at(2 * y + 1, 2 * x + 1) += g;
        }
}

struct Trace {
    Grid x;                   // normalized input
    Grid kv;                  // high-pass residual
    std::vector<Grid> a1;     // conv1 pre-activation
    std::vector<Grid> t1;     // tanh(|a1|)
    std::vector<Grid> p1;     // pooled
    std::vector<Grid> a2;     // conv2 pre-activation
    std::vector<Grid> t2;     // tanh(a2)
    std::vector<Grid> p2;     // pooled
    std::array<double, kC2> gpool{};
    std::array<double, kClasses> logits{};
    std::array<double, kClasses> probs{};
};

Trace forward_real(const ClassifierModel& model, const Grid& pixels) {
    if (pixels.width != model.input_width || pixels.height != model.input_height)
        throw Error("classifier: image size does not match the model input size");
    const int w = pixels.width, h = pixels.height;
    Trace tr;
    tr.x = Grid(w, h);
    for (std::size_t i = 0; i < pixels.size(); ++i) tr.x.v[i] = pixels.v[i] / 255.0 - 0.5;

    tr.kv = Grid(w, h);
    conv_same(tr.x, kKV, kK1, tr.kv);
    for (auto& v : tr.kv.v) v /= 12.0;

    tr.a1.assign(kC1, Grid(w, h));
    tr.t1.assign(kC1, Grid(w, h));
    tr.p1.reserve(kC1);
    for (int c = 0; c < kC1; ++c) {
        conv_same(tr.kv, model.conv1_w.data() + c * kK1 * kK1, kK1, tr.a1[c], model.conv1_b[c]);
        for (std::size_t i = 0; i < tr.a1[c].size(); ++i)
            tr.t1[c].v[i] = std::tanh(std::abs(tr.a1[c].v[i]));
        tr.p1.push_back(mean_pool2(tr.t1[c]));
    }

    const int w2 = w / 2, h2 = h / 2;
    tr.a2.assign(kC2, Grid(w2, h2));
    tr.t2.assign(kC2, Grid(w2, h2));
    tr.p2.reserve(kC2);
    for (int o = 0; o < kC2; ++o) {
        Grid acc(w2, h2, model.conv2_b[o]);
        for (int i = 0; i < kC1; ++i) {
            Grid part(w2, h2);
            conv_same(tr.p1[i], model.conv2_w.data() + (o * kC1 + i) * kK2 * kK2, kK2, part);
            for (std::size_t t = 0; t < acc.size(); ++t) acc.v[t] += part.v[t];
        }
        tr.a2[o] = std::move(acc);
        for (std::size_t t = 0; t < tr.a2[o].size(); ++t) tr.t2[o].v[t] = std::tanh(tr.a2[o].v[t]);
        tr.p2.push_back(mean_pool2(tr.t2[o]));
    }

    for (int o = 0; o < kC2; ++o) {
        double s = 0;
        for (double v : tr.p2[o].v) s += v;
        tr.gpool[o] = s / static_cast<double>(tr.p2[o].size());
    }
    for (int k = 0; k < kClasses; ++k) {
        double s = model.fc_b[k];
        for (int o = 0; o < kC2; ++o) s += model.fc_w[k * kC2 + o] * tr.gpool[o];
        tr.logits[k] = s;
    }
    const double mx = std::max(tr.logits[0], tr.logits[1]);
    const double e0 = std::exp(tr.logits[0] - mx), e1 = std::exp(tr.logits[1] - mx);
    tr.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
    return tr;
}

Grid to_real(const GrayImage& img) {
    Grid g(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) g.v[i] = static_cast<double>(img.data[i]);
    return g;
}

Trace forward(const ClassifierModel& model, const GrayImage& img) {
    return forward_real(model, to_real(img));
}

struct Gradients {
    std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;

    explicit Gradients(bool allocate = true) {
        if (!allocate) return;
        conv1_w.assign(kC1 * kK1 * kK1, 0.0);
        conv1_b.assign(kC1, 0.0);
        conv2_w.assign(kC2 * kC1 * kK2 * kK2, 0.0);
        conv2_b.assign(kC2, 0.0);
        fc_w.assign(kClasses * kC2, 0.0);
        fc_b.assign(kClasses, 0.0);
    }
};

// Backward pass from the cross-entropy loss at `label`. Weight gradients
// accumulate into *gw when given; the input gradient (pixel units) lands in
// *ginput when given.
void backward(const ClassifierModel& model, const Trace& tr, int label, Gradients* gw,
              Grid* ginput) {
    const int w = tr.x.width, h = tr.x.height;
    const int w2 = w / 2, h2 = h / 2;

    std::array<double, kClasses> dlogits{};
    for (int k = 0; k < kClasses; ++k) dlogits[k] = tr.probs[k] - (k == label ? 1.0 : 0.0);

    std::array<double, kC2> dg{};
    for (int k = 0; k < kClasses; ++k) {
        if (gw) {
            for (int o = 0; o < kC2; ++o) gw->fc_w[k * kC2 + o] += dlogits[k] * tr.gpool[o];
            gw->fc_b[k] += dlogits[k];
        }
        for (int o = 0; o < kC2; ++o) dg[o] += dlogits[k] * model.fc_w[k * kC2 + o];
    }

    std::vector<Grid> dp1(kC1, Grid(w2, h2));
    {
        const double inv_cells = 1.0 / (static_cast<double>(w2 / 2) * (h2 / 2));
        for (int o = 0; o < kC2; ++o) {
            // global mean pool and tanh backward
            Grid dt2(w2 / 2, h2 / 2, dg[o] * inv_cells);
            Grid da2(w2, h2);
            mean_pool2_backward(dt2, da2);
            for (std::size_t t = 0; t < da2.size(); ++t)
                da2.v[t] *= 1.0 - tr.t2[o].v[t] * tr.t2[o].v[t];
            if (gw) {
                for (int i = 0; i < kC1; ++i)
                    conv_same_kernel_grad(tr.p1[i], da2, kK2,
                                          gw->conv2_w.data() + (o * kC1 + i) * kK2 * kK2);
                for (double v : da2.v) gw->conv2_b[o] += v;
            }
            for (int i = 0; i < kC1; ++i)
                conv_same_transpose(da2, model.conv2_w.data() + (o * kC1 + i) * kK2 * kK2, kK2,
                                    dp1[i]);
        }
    }

    Grid dkv(w, h);
    for (int c = 0; c < kC1; ++c) {
        Grid dt1(w, h);
        mean_pool2_backward(dp1[c], dt1);
        // tanh(|a|) backward: through tanh' then sign(a), with sign(0) = 0
        for (std::size_t t = 0; t < dt1.size(); ++t) {
            const double a = tr.a1[c].v[t];
            const double tt = tr.t1[c].v[t];
            const double sign = a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0);
            dt1.v[t] *= (1.0 - tt * tt) * sign;
        }
        if (gw) {
            conv_same_kernel_grad(tr.kv, dt1, kK1, gw->conv1_w.data() + c * kK1 * kK1);
            for (double v : dt1.v) gw->conv1_b[c] += v;
        }
        if (ginput) conv_same_transpose(dt1, model.conv1_w.data() + c * kK1 * kK1, kK1, dkv);
    }

    if (ginput) {
        Grid dx(w, h);
        for (auto& v : dkv.v) v /= 12.0;
        conv_same_transpose(dkv, kKV, kK1, dx);
        *ginput = Grid(w, h);
        for (std::size_t t = 0; t < dx.size(); ++t) ginput->v[t] = dx.v[t] / 255.0;
    }
}

void apply_sgd(std::vector<double>& w, std::vector<double>& velocity, const std::vector<double>& g,
               double lr, double momentum, double scale) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * g[i] * scale;
        w[i] += velocity[i];
    }
}

} // namespace

ClassifierModel init_model(int input_width, int input_height, std::uint64_t seed) {
    if (input_width % 4 != 0 || input_height % 4 != 0 || input_width < 8 || input_height < 8)
        throw Error("classifier: input sides must be multiples of 4 and at least 8");
    ClassifierModel m;
    m.input_width = input_width;
    m.input_height = input_height;
    m.seed = seed;
    Rng rng = Rng(seed).split(0x696e6974ull); // stream tag: "init"
    auto fill = [&rng](std::vector<double>& v, std::size_t n, double stddev) {
        v.resize(n);
        for (auto& x : v) x = stddev * rng.next_gaussian();
    };
    fill(m.conv1_w, kC1 * kK1 * kK1, std::sqrt(2.0 / (kK1 * kK1)));
    m.conv1_b.assign(kC1, 0.0);
    fill(m.conv2_w, kC2 * kC1 * kK2 * kK2, std::sqrt(2.0 / (kC1 * kK2 * kK2)));
    m.conv2_b.assign(kC2, 0.0);
    fill(m.fc_w, kClasses * kC2, std::sqrt(2.0 / kC2));
    m.fc_b.assign(kClasses, 0.0);
    return m;
}

double classifier_phi(const ClassifierModel& model, const GrayImage& img) {
    return forward(model, img).probs[kCoverClass];
}

int classify(const ClassifierModel& model, const GrayImage& img) {
    return classifier_phi(model, img) >= 0.5 ? kCoverClass : kStegoClass;
}

double classifier_loss(const ClassifierModel& model, const GrayImage& img, int label) {
    return classifier_loss(model, to_real(img), label);
}

double classifier_loss(const ClassifierModel& model, const Grid& real_pixels, int label) {
    if (label != kStegoClass && label != kCoverClass) throw Error("classifier: bad label");
    const Trace tr = forward_real(model, real_pixels);
    return -std::log(std::max(tr.probs[label], 1e-300));
}

Grid input_gradient(const ClassifierModel& model, const GrayImage& img, int label) {
    return input_gradient(model, to_real(img), label);
}

Grid input_gradient(const ClassifierModel& model, const Grid& real_pixels, int label) {
    if (label != kStegoClass && label != kCoverClass) throw Error("classifier: bad label");
    detail::gradient_eval_count.fetch_add(1, std::memory_order_relaxed);
    const Trace tr = forward_real(model, real_pixels);
    Grid g;
    backward(model, tr, label, nullptr, &g);
    return g;
}

ClassifierModel train_classifier(const std::vector<GrayImage>& covers,
                                 const std::vector<GrayImage>& stegos,
                                 const std::vector<GrayImage>& val_covers,
                                 const std::vector<GrayImage>& val_stegos, int epochs,
                                 std::uint64_t seed, const TrainOptions& options) {
    if (covers.empty() || covers.size() != stegos.size())
        throw Error("train_classifier: need equal non-empty cover/stego sets");
    if (val_covers.empty() || val_covers.size() != val_stegos.size())
        throw Error("train_classifier: need equal non-empty validation sets");
    for (const auto& img : covers)
        if (img.width != covers[0].width || img.height != covers[0].height)
            throw Error("train_classifier: images must share one size");

    ClassifierModel model = init_model(covers[0].width, covers[0].height, seed);
    Gradients velocity;
    Rng shuffle_rng = Rng(seed).split(0x7368756646ull);

    ClassifierModel best = model;
    double best_acc = -1.0;
    double lr = options.learning_rate;

    std::vector<std::size_t> order(covers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        if (epoch > 0 && options.lr_step > 0 && epoch % options.lr_step == 0)
            lr *= options.lr_decay;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(options.batch_pairs)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(options.batch_pairs));
            Gradients grads;
            for (std::size_t k = start; k < stop; ++k) {
                const Trace tc = forward(model, covers[order[k]]);
                backward(model, tc, kCoverClass, &grads, nullptr);
                const Trace ts = forward(model, stegos[order[k]]);
                backward(model, ts, kStegoClass, &grads, nullptr);
            }
            const double scale = 1.0 / (2.0 * static_cast<double>(stop - start));
            apply_sgd(model.conv1_w, velocity.conv1_w, grads.conv1_w, lr, options.momentum, scale);
            apply_sgd(model.conv1_b, velocity.conv1_b, grads.conv1_b, lr, options.momentum, scale);
            apply_sgd(model.conv2_w, velocity.conv2_w, grads.conv2_w, lr, options.momentum, scale);
            apply_sgd(model.conv2_b, velocity.conv2_b, grads.conv2_b, lr, options.momentum, scale);
            apply_sgd(model.fc_w, velocity.fc_w, grads.fc_w, lr, options.momentum, scale);
            apply_sgd(model.fc_b, velocity.fc_b, grads.fc_b, lr, options.momentum, scale);
        }

        model.epochs_trained = epoch + 1;
        const double acc = classification_accuracy(model, val_covers, val_stegos);
        if (acc > best_acc) {
            best_acc = acc;
            best = model;
        }
    }
    return best;
}

ClassifierModel train_classifier(const std::vector<GrayImage>& covers,
                                 const std::vector<GrayImage>& stegos, int epochs,
                                 std::uint64_t seed) {
    if (covers.size() != stegos.size() || covers.empty())
        throw Error("train_classifier: need equal non-empty cover/stego sets");
    const std::size_t n_val = std::max<std::size_t>(1, covers.size() / 10);
    const std::size_t n_train = covers.size() - n_val;
    if (n_train == 0) throw Error("train_classifier: too few pairs to split off validation");
    const std::vector<GrayImage> tc(covers.begin(), covers.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<GrayImage> ts(stegos.begin(), stegos.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<GrayImage> vc(covers.begin() + static_cast<std::ptrdiff_t>(n_train), covers.end());
    const std::vector<GrayImage> vs(stegos.begin() + static_cast<std::ptrdiff_t>(n_train), stegos.end());
    return train_classifier(tc, ts, vc, vs, epochs, seed);
}

double classification_accuracy(const ClassifierModel& model, const std::vector<GrayImage>& covers,
                               const std::vector<GrayImage>& stegos) {
    if (covers.empty() && stegos.empty()) throw Error("classification_accuracy: empty sets");
    long correct = 0;
    for (const auto& img : covers) correct += classify(model, img) == kCoverClass;
    for (const auto& img : stegos) correct += classify(model, img) == kStegoClass;
    return static_cast<double>(correct) / static_cast<double>(covers.size() + stegos.size());
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kArchTag = 1; // kv5 / 8c5 abs tanh pool / 16c3 tanh pool / fc2

} // namespace

void save_model(const ClassifierModel& model, const std::string& path) {
    std::vector<std::uint8_t> out = {'S', 'T', 'G', 'M'};
    put_u32(out, kModelVersion);
    put_u32(out, kArchTag);
    put_u32(out, static_cast<std::uint32_t>(model.input_width));
    put_u32(out, static_cast<std::uint32_t>(model.input_height));
    put_u32(out, static_cast<std::uint32_t>(model.epochs_trained));
    put_u32(out, static_cast<std::uint32_t>(model.seed));
    put_u32(out, static_cast<std::uint32_t>(model.seed >> 32));
    for (const auto* tensor : {&model.conv1_w, &model.conv1_b, &model.conv2_w, &model.conv2_b,
                               &model.fc_w, &model.fc_b})
        for (double v : *tensor) put_f32(out, static_cast<float>(v));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("I/O failure while writing " + path);
}

ClassifierModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open model file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 32 || std::memcmp(bytes.data(), "STGM", 4) != 0)
        throw Error("malformed model file: " + path);
    if (get_u32(bytes.data() + 4) != kModelVersion || get_u32(bytes.data() + 8) != kArchTag)
        throw Error("unsupported model version/architecture: " + path);
    ClassifierModel m;
    m.input_width = static_cast<int>(get_u32(bytes.data() + 12));
    m.input_height = static_cast<int>(get_u32(bytes.data() + 16));
    m.epochs_trained = static_cast<int>(get_u32(bytes.data() + 20));
    m.seed = static_cast<std::uint64_t>(get_u32(bytes.data() + 24)) |
             (static_cast<std::uint64_t>(get_u32(bytes.data() + 28)) << 32);

    const std::size_t counts[6] = {kC1 * kK1 * kK1, kC1, kC2 * kC1 * kK2 * kK2, kC2,
                                   kClasses * kC2,  kClasses};
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (bytes.size() != 32 + 4 * total) throw Error("malformed model file: " + path);

    std::size_t pos = 32;
    std::vector<double>* tensors[6] = {&m.conv1_w, &m.conv1_b, &m.conv2_w,
                                       &m.conv2_b, &m.fc_w,    &m.fc_b};
    for (int t = 0; t < 6; ++t) {
        tensors[t]->resize(counts[t]);
        for (std::size_t i = 0; i < counts[t]; ++i) {
            const std::uint32_t bits = get_u32(bytes.data() + pos);
            float fv;
            std::memcpy(&fv, &bits, 4);
            (*tensors[t])[i] = static_cast<double>(fv);
            pos += 4;
        }
    }
    return m;
}

} // namespace stegolab
