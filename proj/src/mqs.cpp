#include "mqg/mqs.hpp"

#include <cmath>
#include <string>

#include "mqg/error.hpp"

namespace mqg {
namespace {

void check_batch(const MQSBatch& batch) {
  if (batch.m() == 0) throw Error("MQS loss needs at least one reference representation");
  const auto dim = batch.target_rep.vector.size();
  if (dim == 0) throw Error("MQS loss: empty target representation");
  for (const auto& q : batch.reference_reps) {
    if (q.vector.size() != dim) {
      throw Error("MQS loss: reference dimension " + std::to_string(q.vector.size()) +
                  " differs from target dimension " + std::to_string(dim));
    }
  }
}

}  // namespace

SentenceRepresentation mean_pool(const Eigen::MatrixXd& token_states, TokenSpan span) {
  if (span.size() == 0) throw Error("mean_pool: empty token span");
  if (span.end > static_cast<std::size_t>(token_states.rows())) {
    throw Error("mean_pool: span end " + std::to_string(span.end) + " exceeds " +
                std::to_string(token_states.rows()) + " token rows");
  }
  const auto rows = token_states.middleRows(static_cast<Eigen::Index>(span.begin),
                                            static_cast<Eigen::Index>(span.size()));
  return {rows.colwise().mean().transpose()};
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error("cosine similarity undefined for a zero-norm vector");
  return a.dot(b) / (na * nb);
}

double mqs_loss(const MQSBatch& batch) {
  check_batch(batch);
  double sum = 0.0;
  for (const auto& q : batch.reference_reps) {
    sum += std::max(0.0, 1.0 - cosine_similarity(q.vector, batch.target_rep.vector));
  }
  return sum / static_cast<double>(batch.m());
}

Eigen::VectorXd mqs_loss_gradient(const MQSBatch& batch) {
  check_batch(batch);
  const auto& t = batch.target_rep.vector;
  const double nt = t.norm();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(t.size());
  for (const auto& qr : batch.reference_reps) {
    const auto& q = qr.vector;
    const double s = cosine_similarity(q, t);
    if (s >= 1.0) continue;
    // d cos / d t = q / (|q||t|) - cos * t / |t|^2
    grad -= q / (q.norm() * nt) - s * t / (nt * nt);
  }
  return grad / static_cast<double>(batch.m());
}

double total_loss(double ce, double mqs, double beta) {
  if (!(beta >= 0.0)) throw Error("beta must be non-negative");
  if (!std::isfinite(ce) || !std::isfinite(mqs) || !std::isfinite(beta)) {
    throw Error("total_loss: non-finite input");
  }
  return ce + beta * mqs;
}

}  // namespace mqg
