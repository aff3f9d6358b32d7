#include "metacde/cme.hpp"

#include "metacde/errors.hpp"

namespace metacde {

CmeOperator cme_fit(const Tensor& ctx_x_feats, const Tensor& ctx_y_feats, double ridge) {
  if (ctx_x_feats.rank() != 2 || ctx_y_feats.rank() != 2)
    throw DimensionError("cme_fit: feature matrices must be rank-2");
  if (ctx_x_feats.rows() != ctx_y_feats.rows())
    throw DimensionError("cme_fit: x features have " + std::to_string(ctx_x_feats.rows()) +
                         " rows, y features " + std::to_string(ctx_y_feats.rows()));
  if (ctx_x_feats.rows() < 1) throw DomainError("cme_fit: empty context");
  if (!(ridge > 0.0)) throw DomainError("cme_fit: ridge must be positive");

  const int n = ctx_x_feats.rows();
  Tensor eye = tensor_zeros({n, n});
  for (int i = 0; i < n; ++i) (*eye.data)[static_cast<size_t>(i) * n + i] = ridge;

  CmeOperator op;
  op.ctx_x_feats = ctx_x_feats;
  op.ctx_y_feats = ctx_y_feats;
  op.ridge = ridge;
  op.gram_reg = add(matmul(ctx_x_feats, ctx_x_feats, false, true), eye);
  if (!op.gram_reg.on_tape()) op.cache = std::make_shared<CholFactor>(cholesky(n, op.gram_reg.ptr()));
  return op;
}

Tensor cme_embed(const CmeOperator& op, const Tensor& query_x_feats) {
  if (query_x_feats.rank() != 2 || query_x_feats.cols() != op.ctx_x_feats.cols())
    throw DimensionError("cme_embed: query features [" + std::to_string(query_x_feats.rows()) + " x " +
                         std::to_string(query_x_feats.cols()) + "] do not match context feature dim " +
                         std::to_string(op.ctx_x_feats.cols()));
  Tensor cross = matmul(op.ctx_x_feats, query_x_feats, false, true);  // [n x t]
  Tensor alpha;
  if (op.cache && !op.gram_reg.on_tape() && !cross.on_tape()) {
    alpha = tensor_zeros({op.gram_reg.rows(), cross.cols()});
    chol_solve(*op.cache, cross.cols(), cross.ptr(), alpha.ptr());
  } else {
    alpha = spd_solve(op.gram_reg, cross);
  }
  return matmul(alpha, op.ctx_y_feats, true, false);  // [t x dy_feat]
}

Tensor cme_scores(const Tensor& embeds, const Tensor& y_feats) { return rowwise_dot(embeds, y_feats); }

}  // namespace metacde
