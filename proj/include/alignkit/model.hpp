#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alignkit/decomp.hpp"
#include "alignkit/tensor.hpp"

namespace alignkit::neural {

// Reserved vocabulary ids shared by every architecture. Corpus tokens start
// at kFirstTokenId.
constexpr int kBosId = 0;
constexpr int kEosId = 1;
constexpr int kFirstTokenId = 2;

struct ModelConfig {
  std::string arch = "alignart";  // alignart | nat | art
  int vocab_size = 52;
  int model_dim = 64;
  int hidden_dim = 256;
  int encoder_layers = 2;
  int decoder_layers = 1;
  int attention_heads = 4;
  double dropout_rate = 0.1;
  int max_duplication_class = 16;  // classes 0..max_duplication_class
  double label_smoothing = 0.1;
  double alpha = 0.5, beta = 0.5, gamma = 0.5;  // loss weights for L_D, L_P, L_G
  bool cross_attention = true;
  bool smooth_dup_group = false;  // label smoothing for duplication/grouping losses
  int max_positions = 256;
  std::uint64_t init_seed = 1;
  // corpus tokens in id order (ids start at kFirstTokenId); rides along in
  // checkpoints so translate needs no separate vocabulary file
  std::vector<std::string> vocab_tokens;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  void validate() const;
};

// Permutation predictor output. p_pred / p_bar / gate are detached values;
// gradients flow through gate_logits and pair_logits via loss_permutation.
struct PermPrediction {
  Var gate_logits;  // L x 1, s = Q u (or the test override)
  Var pair_logits;  // L x L, Q K^T with -1e30 on the diagonal; null when L == 1
  Tensor p_pred;    // row-stochastic, p_pred[i][i] == gate[i]
  Tensor p_bar;     // pre-gate attention, diagonal exactly 0
  Tensor gate;      // L x 1, sigma(s)
  int L = 0;
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  void set_dropout_seed(std::uint64_t seed) { drop_rng_ = DetRng(seed); }

  // --- forward pieces ---------------------------------------------------------

  Var encode(const std::vector<int>& ids, bool train);

  Var predict_duplication(const Var& h, bool train);

  // h' rows: c[m] copies of h row m, each shifted by its copy position
  // embedding. Throws when any c[m] exceeds the duplication cap or sum(c)==0.
  Var duplicate_states(const Var& h, const std::vector<int>& c, bool train);

  // gate_override is a test hook that replaces the gate logits with a fixed
  // value before the sigmoid (large positive forces P toward I, large
  // negative toward the pre-gate attention).
  PermPrediction predict_permutation(const Var& h_dup, bool train,
                                     std::optional<double> gate_override = std::nullopt);

  // d'_t = h'_perm[t]
  Var apply_permutation(const Var& h_dup, const std::vector<int>& perm);

  Var predict_grouping(const Var& d_perm, bool train);

  // W h for the row-stochastic aligned-input weights
  Var aligned_inputs(const Var& h, const decomp::AlignedInputWeights& w);

  // plain NAT baseline inputs: d_n = h_{floor(n M / N)}
  Var monotonic_inputs(const Var& h, int n_len);

  // Non-autoregressive decoder over aligned inputs; h may be null when the
  // model was built without cross attention.
  Var decode(const Var& d_inputs, const Var& h, bool train);

  // --- autoregressive teacher -------------------------------------------------

  // Causal decoder logits for input [BOS, tgt...]; row t predicts tgt[t]
  // (last row predicts EOS).
  Var ar_logits(const Var& h, const std::vector<int>& tgt, bool train);

  // sum_n log p(y_n | y_<n, x) + log p(EOS | y, x)
  double ar_sequence_logprob(const std::vector<int>& src, const std::vector<int>& tgt);

  // --- losses -------------------------------------------------------------

  Var loss_duplication(const Var& dup_logits, const std::vector<int>& c);
  Var loss_permutation(const PermPrediction& pp, const std::vector<int>& perm_gt);
  Var loss_grouping(const Var& group_logits, const std::vector<int>& g);
  Var loss_translation(const Var& token_logits, const std::vector<int>& y);
  Var total_loss(const Var& lt, const Var& ld, const Var& lp, const Var& lg);

 private:
  Var embed(const std::vector<int>& ids, bool train);
  Var encoder_layer(const std::string& prefix, const Var& x, bool train);
  Var decoder_layer(const std::string& prefix, const Var& x, const Var& h, bool causal,
                    bool train);
  Var multi_head_attention(const std::string& prefix, const Var& q_in, const Var& kv_in,
                           int heads, const Tensor* add_mask, bool train);
  Var feed_forward(const std::string& prefix, const Var& x, bool train);
  Var conv_head(const std::string& prefix, const Var& x, bool train);
  Var positions(int len) const;
  void register_params();
  void register_encoder_layer(const std::string& prefix, DetRng& rng);
  void register_decoder_layer(const std::string& prefix, DetRng& rng);
  void register_conv_head(const std::string& prefix, int out_classes, DetRng& rng);

  ModelConfig cfg_;
  ParamStore params_;
  Tensor pos_table_;
  DetRng drop_rng_{1};
};

}  // namespace alignkit::neural
