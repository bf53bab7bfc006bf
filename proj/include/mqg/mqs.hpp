#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace mqg {

/// Sentence-level vector obtained by mean pooling token states.
struct SentenceRepresentation {
  Eigen::VectorXd vector;
};

/// Half-open token index range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
};

/// Mean of rows [span.begin, span.end) of a tokens x hidden matrix.
SentenceRepresentation mean_pool(const Eigen::MatrixXd& token_states, TokenSpan span);

struct MQSBatch {
  std::vector<SentenceRepresentation> reference_reps;  // Q_1..Q_m
  SentenceRepresentation target_rep;                   // TQ

  std::size_t m() const { return reference_reps.size(); }
};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// (1/m) * sum_i max(0, 1 - cos(Q_i, TQ)). Requires m >= 1 and non-zero vectors.
double mqs_loss(const MQSBatch& batch);

/// Gradient of mqs_loss with respect to the target representation. The hinge
/// contributes nothing where cos(Q_i, TQ) >= 1.
Eigen::VectorXd mqs_loss_gradient(const MQSBatch& batch);

/// ce + beta * mqs. Throws on negative beta or non-finite inputs.
double total_loss(double ce, double mqs, double beta);

}  // namespace mqg
