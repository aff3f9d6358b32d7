#pragma once

#include <memory>

#include "metacde/tensor.hpp"

namespace metacde {

// Conditional mean embedding operator built from context feature matrices
// (rows = context points). Embedding a query x gives the weighted combination
// of context y-features solve(K + ridge*I, k(x)) . Y where K is the x-feature
// Gram matrix. With identity feature maps this is exactly closed-form ridge
// regression, which is what the equivalence tests pin.
struct CmeOperator {
  Tensor ctx_x_feats;  // [n x d]
  Tensor ctx_y_feats;  // [n x dy_feat]
  Tensor gram_reg;     // [n x n], K + ridge*I (taped when the features are)
  double ridge = 0.0;
  // Eager mode factors once at fit and reuses across embeds; taped mode
  // leaves factorization to the solve op so gradients flow.
  std::shared_ptr<CholFactor> cache;
};

CmeOperator cme_fit(const Tensor& ctx_x_feats, const Tensor& ctx_y_feats, double ridge);

// Embeddings for query feature rows: [t x d] -> [t x dy_feat]. One solve
// serves all rows.
Tensor cme_embed(const CmeOperator& op, const Tensor& query_x_feats);

// Paired scores <embed_i, y_feat_i> -> {t}.
Tensor cme_scores(const Tensor& embeds, const Tensor& y_feats);

}  // namespace metacde
