#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "stegolab/grid.hpp"
#include "stegolab/image.hpp"

namespace stegolab {

// Class conventions: label 1 = cover, label 0 = stego; the forward output
// phi is the cover-class probability.
inline constexpr int kStegoClass = 0;
inline constexpr int kCoverClass = 1;

// Small differentiable steganalyzer: fixed 5x5 high-pass preprocessing,
// conv 8x5x5 + |.| + tanh + 2x mean-pool, conv 16x3x3 + tanh + 2x
// mean-pool, global mean-pool, linear to 2 logits, softmax. All
// convolutions are same-size with zero padding; input sides must be
// divisible by 4.
struct ClassifierModel {
    int input_width = 0;
    int input_height = 0;
    int epochs_trained = 0;
    std::uint64_t seed = 0;

    std::vector<double> conv1_w; // 8 x 5 x 5
    std::vector<double> conv1_b; // 8
    std::vector<double> conv2_w; // 16 x 8 x 3 x 3
    std::vector<double> conv2_b; // 16
    std::vector<double> fc_w;    // 2 x 16
    std::vector<double> fc_b;    // 2
};

ClassifierModel init_model(int input_width, int input_height, std::uint64_t seed);

// Cover-class probability in [0, 1].
double classifier_phi(const ClassifierModel& model, const GrayImage& img);

// 1 (cover) iff phi >= 0.5, else 0 (stego); the boundary counts as cover.
int classify(const ClassifierModel& model, const GrayImage& img);

// Cross-entropy of the softmax output against the given label. The Grid
// overload takes real-valued pixels (0..255 scale), which is what
// finite-difference checks of the gradient differentiate through.
double classifier_loss(const ClassifierModel& model, const GrayImage& img, int label);
double classifier_loss(const ClassifierModel& model, const Grid& real_pixels, int label);

// Exact gradient of the loss with respect to the input pixels (chain rule
// through the x/255 - 0.5 normalization included).
Grid input_gradient(const ClassifierModel& model, const GrayImage& img, int label);
Grid input_gradient(const ClassifierModel& model, const Grid& real_pixels, int label);

struct TrainOptions {
    int epochs = 20;
    int batch_pairs = 16;       // cover/stego pairs per mini-batch
    double learning_rate = 0.05;
    double momentum = 0.9;
    double lr_decay = 0.5;      // applied every lr_step epochs
    int lr_step = 8;
};

// Mini-batch gradient descent with momentum on cross-entropy; paired
// cover/stego batches; returns the parameters that scored best on the
// validation pairs. Deterministic given the seed.
ClassifierModel train_classifier(const std::vector<GrayImage>& covers,
                                 const std::vector<GrayImage>& stegos,
                                 const std::vector<GrayImage>& val_covers,
                                 const std::vector<GrayImage>& val_stegos, int epochs,
                                 std::uint64_t seed, const TrainOptions& options = {});

// Convenience overload: carves the trailing 10% of pairs off as validation.
ClassifierModel train_classifier(const std::vector<GrayImage>& covers,
                                 const std::vector<GrayImage>& stegos, int epochs,
                                 std::uint64_t seed);

// Fraction of correct decisions over covers (want 1) and stegos (want 0).
double classification_accuracy(const ClassifierModel& model, const std::vector<GrayImage>& covers,
                               const std::vector<GrayImage>& stegos);

// Model files: "STGM", u32 version, u32 architecture tag, u32 width, u32
// height, u32 epochs, u64 seed, then raw little-endian f32 tensors in
// declaration order.
void save_model(const ClassifierModel& model, const std::string& path);
ClassifierModel load_model(const std::string& path);

namespace detail {
// Bumped on every input_gradient call; tests pin the gradient-reuse
// contract of the attack loop with it.
extern std::atomic<long> gradient_eval_count;
} // namespace detail

} // namespace stegolab
