#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ideotrack {

/// Dense text vectors keyed by quote id. All vectors share one dimension,
/// fixed by the first insertion, and every entry is finite.
class EmbeddingMatrix {
public:
  EmbeddingMatrix() = default;

  /// Throws dimension_mismatch, non_finite_value, or duplicate_id.
  void insert(const std::string& id, const Eigen::VectorXd& vector);

  std::optional<Eigen::Index> dimension() const { return dimension_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(const std::string& id) const { return rows_.contains(id); }

  /// Insertion order.
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::VectorXd& at(const std::string& id) const;

  /// Stacks the vectors for `ids` as rows; throws schema if one is missing.
  Eigen::MatrixXd rows(std::span<const std::string> ids) const;

private:
  std::optional<Eigen::Index> dimension_;
  std::vector<std::string> ids_;
  std::vector<Eigen::VectorXd> vectors_;
  std::unordered_map<std::string, std::size_t> rows_;
};

/// Reads JSONL records `{"id": ..., "vector": [...]}`.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& embeddings, const std::filesystem::path& path);

}  // namespace ideotrack
