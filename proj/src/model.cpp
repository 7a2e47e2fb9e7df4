#include "alignkit/model.hpp"

#include <cmath>
#include <json.hpp>

namespace alignkit::neural {

using nlohmann::json;

std::string ModelConfig::to_json() const {
  json j;
  j["arch"] = arch;
  j["vocab_size"] = vocab_size;
  j["model_dim"] = model_dim;
  j["hidden_dim"] = hidden_dim;
  j["encoder_layers"] = encoder_layers;
  j["decoder_layers"] = decoder_layers;
  j["attention_heads"] = attention_heads;
  j["dropout_rate"] = dropout_rate;
  j["max_duplication_class"] = max_duplication_class;
  j["label_smoothing"] = label_smoothing;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["gamma"] = gamma;
  j["cross_attention"] = cross_attention;
  j["smooth_dup_group"] = smooth_dup_group;
  j["max_positions"] = max_positions;
  j["init_seed"] = init_seed;
  j["vocab_tokens"] = vocab_tokens;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig c;
  c.arch = j.value("arch", c.arch);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.model_dim = j.value("model_dim", c.model_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.attention_heads = j.value("attention_heads", c.attention_heads);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.max_duplication_class = j.value("max_duplication_class", c.max_duplication_class);
  c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.cross_attention = j.value("cross_attention", c.cross_attention);
  c.smooth_dup_group = j.value("smooth_dup_group", c.smooth_dup_group);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.init_seed = j.value("init_seed", c.init_seed);
  c.vocab_tokens = j.value("vocab_tokens", c.vocab_tokens);
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  if (arch != "alignart" && arch != "nat" && arch != "art")
    throw DataError("unknown arch: " + arch);
  if (vocab_size < kFirstTokenId + 1) throw DataError("vocab_size too small");
  if (encoder_layers < 1 || decoder_layers < 1)
    throw DataError("encoder/decoder layer counts must be >= 1");
  if (model_dim < 1 || hidden_dim < 1) throw DataError("model/hidden dims must be >= 1");
  if (attention_heads < 1 || model_dim % attention_heads != 0)
    throw DataError("model_dim must be divisible by attention_heads");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw DataError("dropout_rate must be in [0,1)");
  if (max_duplication_class < 1) throw DataError("max_duplication_class must be >= 1");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0)
    throw DataError("label_smoothing must be in [0,1)");
  if (max_positions < 2) throw DataError("max_positions too small");
}

namespace {

constexpr double kMaskValue = -1e30;

Tensor sinusoid_table(int max_len, int dim) {
  Tensor t(max_len, dim);
  for (int pos = 0; pos < max_len; ++pos)
    for (int i = 0; i < dim; ++i) {
      const double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / dim);
      t.at(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return t;
}

Tensor glorot(int rows, int cols, DetRng& rng) {
  return Tensor::randn(rows, cols, std::sqrt(2.0 / (rows + cols)), rng);
}

Tensor diag_mask(int n) {
  Tensor m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = kMaskValue;
  return m;
}

Tensor causal_mask(int n) {
  Tensor m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m.at(i, j) = kMaskValue;
  return m;
}

}  // namespace

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  pos_table_ = sinusoid_table(cfg_.max_positions, cfg_.model_dim);
  register_params();
}

void Model::register_encoder_layer(const std::string& p, DetRng& rng) {
  const int d = cfg_.model_dim, f = cfg_.hidden_dim;
  params_.add(p + ".ln1.g", Tensor::full(1, d, 1.0));
  params_.add(p + ".ln1.b", Tensor(1, d));
  params_.add(p + ".attn.wq", glorot(d, d, rng));
  params_.add(p + ".attn.bq", Tensor(1, d));
  params_.add(p + ".attn.wk", glorot(d, d, rng));
  params_.add(p + ".attn.bk", Tensor(1, d));
  params_.add(p + ".attn.wv", glorot(d, d, rng));
  params_.add(p + ".attn.bv", Tensor(1, d));
  params_.add(p + ".attn.wo", glorot(d, d, rng));
  params_.add(p + ".attn.bo", Tensor(1, d));
  params_.add(p + ".ln2.g", Tensor::full(1, d, 1.0));
  params_.add(p + ".ln2.b", Tensor(1, d));
  params_.add(p + ".ffn.w1", glorot(d, f, rng));
  params_.add(p + ".ffn.b1", Tensor(1, f));
  params_.add(p + ".ffn.w2", glorot(f, d, rng));
  params_.add(p + ".ffn.b2", Tensor(1, d));
}

void Model::register_decoder_layer(const std::string& p, DetRng& rng) {
  register_encoder_layer(p, rng);  // self attention + ffn blocks
  if (!cfg_.cross_attention) return;
  const int d = cfg_.model_dim;
  params_.add(p + ".lnx.g", Tensor::full(1, d, 1.0));
  params_.add(p + ".lnx.b", Tensor(1, d));
  params_.add(p + ".xattn.wq", glorot(d, d, rng));
  params_.add(p + ".xattn.bq", Tensor(1, d));
  params_.add(p + ".xattn.wk", glorot(d, d, rng));
  params_.add(p + ".xattn.bk", Tensor(1, d));
  params_.add(p + ".xattn.wv", glorot(d, d, rng));
  params_.add(p + ".xattn.bv", Tensor(1, d));
  params_.add(p + ".xattn.wo", glorot(d, d, rng));
  params_.add(p + ".xattn.bo", Tensor(1, d));
}

void Model::register_conv_head(const std::string& p, int out_classes, DetRng& rng) {
  const int d = cfg_.model_dim;
  params_.add(p + ".conv.w", glorot(3 * d, d, rng));
  params_.add(p + ".conv.b", Tensor(1, d));
  params_.add(p + ".ln.g", Tensor::full(1, d, 1.0));
  params_.add(p + ".ln.b", Tensor(1, d));
  params_.add(p + ".proj.w", glorot(d, out_classes, rng));
  params_.add(p + ".proj.b", Tensor(1, out_classes));
}

void Model::register_params() {
  DetRng rng(cfg_.init_seed);
  const int d = cfg_.model_dim;

  params_.add("embed.tok", Tensor::randn(cfg_.vocab_size, d, 1.0 / std::sqrt(double(d)), rng));
  for (int i = 0; i < cfg_.encoder_layers; ++i)
    register_encoder_layer("enc.l" + std::to_string(i), rng);
  params_.add("enc.final_ln.g", Tensor::full(1, d, 1.0));
  params_.add("enc.final_ln.b", Tensor(1, d));

  if (cfg_.arch == "alignart") {
    register_conv_head("dup", cfg_.max_duplication_class + 1, rng);
    params_.add("copy.emb",
                Tensor::randn(cfg_.max_duplication_class, d, 1.0 / std::sqrt(double(d)), rng));
    register_encoder_layer("perm.pre", rng);
    register_encoder_layer("perm.q", rng);
    register_encoder_layer("perm.k", rng);
    params_.add("perm.gate.u", Tensor::randn(d, 1, 1.0 / std::sqrt(double(d)), rng));
    register_conv_head("grp", 2, rng);
  }

  for (int i = 0; i < cfg_.decoder_layers; ++i)
    register_decoder_layer("dec.l" + std::to_string(i), rng);
  params_.add("dec.final_ln.g", Tensor::full(1, d, 1.0));
  params_.add("dec.final_ln.b", Tensor(1, d));
  params_.add("out.w", glorot(d, cfg_.vocab_size, rng));
  params_.add("out.b", Tensor(1, cfg_.vocab_size));
}

Var Model::positions(int len) const {
  if (len > cfg_.max_positions)
    throw DataError("sequence length " + std::to_string(len) + " exceeds max_positions");
  Tensor p(len, cfg_.model_dim);
  for (int r = 0; r < len; ++r)
    for (int c = 0; c < cfg_.model_dim; ++c) p.at(r, c) = pos_table_.at(r, c);
  return constant(std::move(p));
}

Var Model::embed(const std::vector<int>& ids, bool train) {
  for (int id : ids)
    if (id < 0 || id >= cfg_.vocab_size)
      throw DataError("token id " + std::to_string(id) + " outside vocabulary");
  Var x = gather_rows(params_.get("embed.tok"), ids);
  x = scale(x, std::sqrt(double(cfg_.model_dim)));
  x = add(x, positions(static_cast<int>(ids.size())));
  return dropout(x, cfg_.dropout_rate, drop_rng_, train);
}

Var Model::multi_head_attention(const std::string& p, const Var& q_in, const Var& kv_in,
                                int heads, const Tensor* add_mask, bool train) {
  const int d = cfg_.model_dim, dk = d / heads;
  Var q = add_rowvec(matmul(q_in, params_.get(p + ".wq")), params_.get(p + ".bq"));
  Var k = add_rowvec(matmul(kv_in, params_.get(p + ".wk")), params_.get(p + ".bk"));
  Var v = add_rowvec(matmul(kv_in, params_.get(p + ".wv")), params_.get(p + ".bv"));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int hh = 0; hh < heads; ++hh) {
    Var qh = slice_cols(q, hh * dk, (hh + 1) * dk);
    Var kh = slice_cols(k, hh * dk, (hh + 1) * dk);
    Var vh = slice_cols(v, hh * dk, (hh + 1) * dk);
    Var logits = scale(matmul(qh, kh, false, true), 1.0 / std::sqrt(double(dk)));
    if (add_mask) logits = add(logits, constant(*add_mask));
    outs.push_back(matmul(softmax_rows(logits), vh));
  }
  Var cat = heads == 1 ? outs[0] : concat_cols(outs);
  Var out = add_rowvec(matmul(cat, params_.get(p + ".wo")), params_.get(p + ".bo"));
  return dropout(out, cfg_.dropout_rate, drop_rng_, train);
}

Var Model::feed_forward(const std::string& p, const Var& x, bool train) {
  Var h = relu(add_rowvec(matmul(x, params_.get(p + ".ffn.w1")), params_.get(p + ".ffn.b1")));
  h = dropout(h, cfg_.dropout_rate, drop_rng_, train);
  Var out = add_rowvec(matmul(h, params_.get(p + ".ffn.w2")), params_.get(p + ".ffn.b2"));
  return dropout(out, cfg_.dropout_rate, drop_rng_, train);
}

Var Model::encoder_layer(const std::string& p, const Var& x, bool train) {
  Var n1 = layer_norm(x, params_.get(p + ".ln1.g"), params_.get(p + ".ln1.b"));
  Var a = multi_head_attention(p + ".attn", n1, n1, cfg_.attention_heads, nullptr, train);
  Var y = add(x, a);
  Var n2 = layer_norm(y, params_.get(p + ".ln2.g"), params_.get(p + ".ln2.b"));
  return add(y, feed_forward(p, n2, train));
}

Var Model::decoder_layer(const std::string& p, const Var& x, const Var& h, bool causal,
                         bool train) {
  Var n1 = layer_norm(x, params_.get(p + ".ln1.g"), params_.get(p + ".ln1.b"));
  Tensor mask;
  if (causal) mask = causal_mask(x->val.rows);
  Var a = multi_head_attention(p + ".attn", n1, n1, cfg_.attention_heads,
                               causal ? &mask : nullptr, train);
  Var y = add(x, a);
  if (cfg_.cross_attention && h) {
    Var nx = layer_norm(y, params_.get(p + ".lnx.g"), params_.get(p + ".lnx.b"));
    Var xa = multi_head_attention(p + ".xattn", nx, h, cfg_.attention_heads, nullptr, train);
    y = add(y, xa);
  }
  Var n2 = layer_norm(y, params_.get(p + ".ln2.g"), params_.get(p + ".ln2.b"));
  return add(y, feed_forward(p, n2, train));
}

Var Model::encode(const std::vector<int>& ids, bool train) {
  if (ids.empty()) throw DataError("cannot encode an empty sentence");
  Var x = embed(ids, train);
  for (int i = 0; i < cfg_.encoder_layers; ++i)
    x = encoder_layer("enc.l" + std::to_string(i), x, train);
  return layer_norm(x, params_.get("enc.final_ln.g"), params_.get("enc.final_ln.b"));
}

Var Model::conv_head(const std::string& p, const Var& x, bool train) {
  Var u = unfold_rows(x, 3);
  Var h = relu(add_rowvec(matmul(u, params_.get(p + ".conv.w")), params_.get(p + ".conv.b")));
  h = layer_norm(h, params_.get(p + ".ln.g"), params_.get(p + ".ln.b"));
  h = dropout(h, cfg_.dropout_rate, drop_rng_, train);
  return add_rowvec(matmul(h, params_.get(p + ".proj.w")), params_.get(p + ".proj.b"));
}

Var Model::predict_duplication(const Var& h, bool train) { return conv_head("dup", h, train); }

Var Model::duplicate_states(const Var& h, const std::vector<int>& c, bool train) {
  (void)train;
  if (static_cast<int>(c.size()) != h->val.rows)
    throw DataError("duplication counts do not match encoder states");
  std::vector<int> src_idx, copy_idx;
  for (std::size_t m = 0; m < c.size(); ++m) {
    if (c[m] < 0) throw DataError("negative duplication count");
    if (c[m] > cfg_.max_duplication_class)
      throw DataError("duplication count " + std::to_string(c[m]) + " exceeds cap " +
                      std::to_string(cfg_.max_duplication_class));
    for (int j = 0; j < c[m]; ++j) {
      src_idx.push_back(static_cast<int>(m));
      copy_idx.push_back(j);
    }
  }
  if (src_idx.empty()) throw DataError("duplication counts sum to zero");
  return add(gather_rows(h, src_idx), gather_rows(params_.get("copy.emb"), copy_idx));
}

PermPrediction Model::predict_permutation(const Var& h_dup, bool train,
                                          std::optional<double> gate_override) {
  const int L = h_dup->val.rows;
  // slot positions make the target-side index of each duplicated state
  // directly visible to the query/key networks
  Var pre = encoder_layer("perm.pre", add(h_dup, positions(L)), train);
  Var q = encoder_layer("perm.q", pre, train);
  Var k = encoder_layer("perm.k", pre, train);

  Var s = gate_override ? constant(Tensor::full(L, 1, *gate_override))
                        : matmul(q, params_.get("perm.gate.u"));

  PermPrediction out;
  out.L = L;
  out.gate_logits = s;
  Var gate_var = sigmoid(s);
  out.gate = gate_var->val;

  if (L == 1) {
    // softmax over a fully masked row is undefined; a single slot is trivially
    // un-permuted
    out.pair_logits = nullptr;
    out.p_bar = Tensor(1, 1);
    out.p_pred = Tensor::full(1, 1, 1.0);
    return out;
  }

  out.pair_logits = add(matmul(q, k, false, true), constant(diag_mask(L)));
  Var p_bar_var = softmax_rows(out.pair_logits);
  out.p_bar = p_bar_var->val;
  out.p_pred = Tensor(L, L);
  for (int i = 0; i < L; ++i) {
    const double g = out.gate.at(i, 0);
    for (int j = 0; j < L; ++j)
      out.p_pred.at(i, j) = i == j ? g : (1.0 - g) * out.p_bar.at(i, j);
  }
  return out;
}

Var Model::apply_permutation(const Var& h_dup, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != h_dup->val.rows)
    throw DataError("permutation length mismatch");
  return gather_rows(h_dup, perm);
}

Var Model::predict_grouping(const Var& d_perm, bool train) {
  return conv_head("grp", d_perm, train);
}

Var Model::aligned_inputs(const Var& h, const decomp::AlignedInputWeights& w) {
  if (w.cols != h->val.rows) throw DataError("aligned-input weights do not match encoder states");
  Tensor wt(w.rows, w.cols);
  wt.v.assign(w.w.begin(), w.w.end());
  return matmul(constant(std::move(wt)), h);
}

Var Model::monotonic_inputs(const Var& h, int n_len) {
  if (n_len < 1) throw DataError("target length must be >= 1");
  const int m_len = h->val.rows;
  std::vector<int> idx(n_len);
  for (int n = 0; n < n_len; ++n) idx[n] = std::min(m_len - 1, n * m_len / n_len);
  return gather_rows(h, idx);
}

Var Model::decode(const Var& d_inputs, const Var& h, bool train) {
  Var x = add(d_inputs, positions(d_inputs->val.rows));
  x = dropout(x, cfg_.dropout_rate, drop_rng_, train);
  for (int i = 0; i < cfg_.decoder_layers; ++i)
    x = decoder_layer("dec.l" + std::to_string(i), x, h, /*causal=*/false, train);
  x = layer_norm(x, params_.get("dec.final_ln.g"), params_.get("dec.final_ln.b"));
  return add_rowvec(matmul(x, params_.get("out.w")), params_.get("out.b"));
}

Var Model::ar_logits(const Var& h, const std::vector<int>& tgt, bool train) {
  std::vector<int> input;
  input.reserve(tgt.size() + 1);
  input.push_back(kBosId);
  input.insert(input.end(), tgt.begin(), tgt.end());
  Var x = embed(input, train);
  for (int i = 0; i < cfg_.decoder_layers; ++i)
    x = decoder_layer("dec.l" + std::to_string(i), x, h, /*causal=*/true, train);
  x = layer_norm(x, params_.get("dec.final_ln.g"), params_.get("dec.final_ln.b"));
  return add_rowvec(matmul(x, params_.get("out.w")), params_.get("out.b"));
}

double Model::ar_sequence_logprob(const std::vector<int>& src, const std::vector<int>& tgt) {
  NoGradGuard ng;
  Var h = encode(src, false);
  Var logits = ar_logits(h, tgt, false);
  Var lp = log_softmax_rows(logits);
  double total = 0.0;
  for (std::size_t t = 0; t <= tgt.size(); ++t) {
    const int target = t < tgt.size() ? tgt[t] : kEosId;
    total += lp->val.at(static_cast<int>(t), target);
  }
  return total;
}

Var Model::loss_duplication(const Var& dup_logits, const std::vector<int>& c) {
  return ce_mean_rows(dup_logits, c, cfg_.smooth_dup_group ? cfg_.label_smoothing : 0.0);
}

Var Model::loss_permutation(const PermPrediction& pp, const std::vector<int>& perm_gt) {
  const int L = pp.L;
  if (static_cast<int>(perm_gt.size()) != L) throw DataError("permutation target mismatch");
  if (L == 1) return constant(Tensor(1, 1));  // no permutation decision exists

  const double eps = cfg_.label_smoothing;
  const double off = eps / L;
  Tensor w_diag(L, 1), w_offmass(L, 1), w_off(L, L);
  for (int i = 0; i < L; ++i) {
    const double diag_q = off + (perm_gt[i] == i ? 1.0 - eps : 0.0);
    w_diag.at(i, 0) = diag_q;
    w_offmass.at(i, 0) = 1.0 - diag_q;
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      w_off.at(i, j) = off + (perm_gt[i] == j ? 1.0 - eps : 0.0);
    }
  }
  // -q_ii log g_i - (sum_offdiag q_ij)(log(1-g_i)) - sum_offdiag q_ij log pbar_ij,
  // with log g = -softplus(-s) and log(1-g) = -softplus(s), averaged by 1/L.
  Var term_diag = weighted_sum(softplus(scale(pp.gate_logits, -1.0)), std::move(w_diag));
  Var term_gate = weighted_sum(softplus(pp.gate_logits), std::move(w_offmass));
  Var term_attn = weighted_sum(log_softmax_rows(pp.pair_logits), std::move(w_off));
  return affine_combine({{1.0 / L, term_diag}, {1.0 / L, term_gate}, {-1.0 / L, term_attn}});
}

Var Model::loss_grouping(const Var& group_logits, const std::vector<int>& g) {
  return ce_mean_rows(group_logits, g, cfg_.smooth_dup_group ? cfg_.label_smoothing : 0.0);
}

Var Model::loss_translation(const Var& token_logits, const std::vector<int>& y) {
  return ce_mean_rows(token_logits, y, cfg_.label_smoothing);
}

Var Model::total_loss(const Var& lt, const Var& ld, const Var& lp, const Var& lg) {
  return affine_combine(
      {{1.0, lt}, {cfg_.alpha, ld}, {cfg_.beta, lp}, {cfg_.gamma, lg}});
}

}  // namespace alignkit::neural
