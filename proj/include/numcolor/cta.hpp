#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "numcolor/crf.hpp"
#include "numcolor/matrix.hpp"
#include "numcolor/optim.hpp"
#include "numcolor/parallel.hpp"
#include "numcolor/span_detector.hpp"
#include "numcolor/tokenizers.hpp"

namespace numcolor {

struct CtaConfig {
    std::size_t char_vocab = 512;
    std::size_t char_dim = 64;
    std::vector<std::size_t> kernel_sizes{2, 3, 4};
    std::size_t token_dim = 256;
    std::size_t max_chars = 32;
    std::size_t layers = 4;
    std::size_t heads = 4;
    std::size_t ffn_dim = 512;
    std::size_t max_seq = 256;
    double dropout = 0.1;

    static CtaConfig toy();

    /// Throws when dimensions are inconsistent.
    void validate() const;
    /// Output channels per kernel: floor(token_dim / n) each, the remainder
    /// going to the smallest kernel.
    [[nodiscard]] std::vector<std::size_t> channels() const;

    friend bool operator==(const CtaConfig&, const CtaConfig&) = default;
};

inline constexpr std::size_t kPadChar = 0;
inline constexpr std::size_t kUnkChar = 1;

/// Character ids for a token surface: FNV-1a of each scalar's UTF-8 bytes
/// mapped into [2, char_vocab); invalid bytes and NUL become UNK. Truncated
/// or PAD-filled to max_chars.
[[nodiscard]] std::vector<std::uint32_t> char_ids(const CtaConfig& cfg, std::string_view surface);

/// One named parameter tensor inside the flat parameter vector.
struct ParamInfo {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    [[nodiscard]] std::size_t size() const noexcept { return rows * cols; }
};

/// Character CNN, pre-norm transformer, linear emissions and a constrained
/// linear-chain CRF. All parameters live in one flat vector in a fixed
/// declared order; values are kept representable in binary32 so that
/// checkpoints round-trip exactly.
class CtaModel {
public:
    /// Zero parameters (layer-norm scales 1) with the CRF constraints set.
    explicit CtaModel(CtaConfig cfg);
    /// Seeded random initialization.
    static CtaModel initialized(CtaConfig cfg, std::uint64_t seed);

    [[nodiscard]] const CtaConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const std::vector<ParamInfo>& layout() const noexcept { return layout_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return params_.size(); }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
    [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
    [[nodiscard]] const ParamInfo& param(std::string_view name) const;

    /// Entries pinned by the hard CRF constraints.
    [[nodiscard]] bool is_frozen(std::size_t flat_index) const noexcept;
    [[nodiscard]] const std::vector<std::size_t>& frozen_indices() const noexcept { return frozen_; }

    /// Reinstalls the CRF constraints and rounds every value to binary32.
    void normalize();

    [[nodiscard]] CrfScores crf() const;
    void set_crf(const CrfScores& scores);

    [[nodiscard]] std::vector<char> serialize() const;
    static CtaModel deserialize(const std::vector<char>& bytes);
    void save(const std::string& path) const;
    static CtaModel load(const std::string& path);

    friend bool operator==(const CtaModel& a, const CtaModel& b) {
        return a.cfg_ == b.cfg_ && a.params_ == b.params_;
    }

    /// Slot indices into layout(), resolved once.
    struct LayerSlots {
        std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
    };
    struct Slots {
        std::size_t char_emb = 0;
        std::vector<std::size_t> conv_w, conv_b;
        std::vector<LayerSlots> layers;
        std::size_t lnf_g = 0, lnf_b = 0, em_w = 0, em_b = 0, crf_trans = 0, crf_start = 0,
                    crf_end = 0;
    };
    [[nodiscard]] const Slots& slots() const noexcept { return slots_; }

private:
    std::size_t add(std::string name, std::size_t rows, std::size_t cols);

    CtaConfig cfg_;
    std::vector<ParamInfo> layout_;
    Slots slots_;
    std::vector<double> params_;
    std::vector<std::size_t> frozen_;
};

/// Dropout switch. Masks come from a counter-based hash of
/// (seed, step, sample, site, element), so they do not depend on evaluation
/// order or thread count.
struct DropoutContext {
    bool training = false;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::uint64_t sample = 0;
};

[[nodiscard]] Eigen::VectorXd encode_token_chars(const CtaModel& model, std::string_view surface);

/// Digest of the char-CNN switching state (max-pool argmax and ReLU activity
/// of every channel of every token). The forward pass is smooth in the
/// parameters wherever this value is constant.
[[nodiscard]] std::uint64_t activation_pattern(const CtaModel& model, const std::vector<Token>& tokens);

/// Prefix added to the surface of word-initial tokens before character
/// encoding, mirroring the word-boundary marks of subword vocabularies.
inline constexpr std::string_view kWordStartMarker = "\xE2\x96\x81";

/// True when token t is first in the list or separated from its predecessor
/// by a gap in character offsets.
[[nodiscard]] bool starts_word(const std::vector<Token>& tokens, std::size_t t);

/// T x token_dim token vectors for a token list. Word-initial tokens are
/// encoded with kWordStartMarker prepended.
[[nodiscard]] RowMatrix encode_tokens(const CtaModel& model, const std::vector<Token>& tokens);

/// Sinusoidal positions plus the transformer stack. Throws when T > max_seq.
[[nodiscard]] RowMatrix contextualize(const CtaModel& model, const RowMatrix& token_vectors,
                                      const DropoutContext& dropout = {});

[[nodiscard]] EmissionMatrix emissions(const CtaModel& model, const RowMatrix& contextualized);

/// Full eval-mode forward pass from tokens to emissions.
[[nodiscard]] EmissionMatrix forward(const CtaModel& model, const std::vector<Token>& tokens,
                                     const DropoutContext& dropout = {});

[[nodiscard]] double crf_nll(const CtaModel& model, const EmissionMatrix& em,
                             const std::vector<Tag>& gold);
[[nodiscard]] std::vector<Tag> viterbi_decode(const CtaModel& model, const EmissionMatrix& em);

/// NLL of one sequence; adds d NLL / d params into `grad` (same layout as
/// model.parameters()).
double loss_and_gradient(const CtaModel& model, const TaggedSequence& example,
                         std::span<double> grad, const DropoutContext& dropout = {});

/// Mean NLL over a batch and its gradient. The batch is cut into fixed chunks
/// whose partial sums are reduced in chunk order, so both backends give the
/// same bits.
double batch_gradient(const CtaModel& model, std::span<const TaggedSequence> batch,
                      std::span<double> grad, const DropoutContext& dropout,
                      parallel::Backend backend = parallel::default_backend());

struct TrainStepOptions {
    AdamWOptions adam;
    std::uint64_t seed = 0;
    parallel::Backend backend = parallel::default_backend();
};

/// Mean NLL over the batch followed by one AdamW step with dropout active.
/// Throws before touching the parameters if the loss is not finite.
double train_step(CtaModel& model, std::span<const TaggedSequence> batch, AdamWState& state,
                  const TrainStepOptions& opt);

struct TaggerTrainOptions {
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    TrainStepOptions step;
};

struct EpochLog {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
};

/// Seeded shuffle per epoch, then minibatch train_step calls.
std::vector<EpochLog> train_tagger(CtaModel& model, const std::vector<TaggedSequence>& data,
                                   const TaggerTrainOptions& opt);

/// Viterbi tags, then B I* groups parsed back into colors.
[[nodiscard]] GroupParse predict_spans(const CtaModel& model, const std::vector<Token>& tokens);

/// Span-level counts; a prediction is correct when (start, end, rgb) equals a
/// reference span not already matched.
struct SpanScores {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::size_t dropped_groups = 0;

    [[nodiscard]] double precision() const noexcept;
    [[nodiscard]] double recall() const noexcept;
    [[nodiscard]] double f1() const noexcept;
    SpanScores& operator+=(const SpanScores& o) noexcept;
};

[[nodiscard]] SpanScores score_spans(const std::vector<ColorSpan>& predicted,
                                     const std::vector<ColorSpan>& reference);

/// Predicted spans of every record against the detector's spans of its text.
[[nodiscard]] SpanScores evaluate_tagger(const CtaModel& model, std::span<const TaggedSequence> records,
                                         parallel::Backend backend = parallel::default_backend());

}  // namespace numcolor
