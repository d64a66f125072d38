#include "ideotrack/embedding.hpp"

#include <fstream>
#include <limits>
#include <json.hpp>

#include "ideotrack/error.hpp"

namespace ideotrack {

void EmbeddingMatrix::insert(const std::string& id, const Eigen::VectorXd& vector) {
  if (dimension_ && vector.size() != *dimension_) {
    throw Error(ErrorKind::dimension_mismatch, "vector for '" + id + "' has length " +
                                                   std::to_string(vector.size()) + ", expected " +
                                                   std::to_string(*dimension_));
  }
  if (!vector.allFinite()) {
    throw Error(ErrorKind::non_finite_value, "vector for '" + id + "' contains NaN or infinity");
  }
  if (rows_.contains(id)) throw Error(ErrorKind::duplicate_id, "embedding id '" + id + "'");
  dimension_ = vector.size();
  rows_.emplace(id, ids_.size());
  ids_.push_back(id);
  vectors_.push_back(vector);
}

const Eigen::VectorXd& EmbeddingMatrix::at(const std::string& id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) throw Error(ErrorKind::schema, "no embedding for quote '" + id + "'");
  return vectors_[it->second];
}

Eigen::MatrixXd EmbeddingMatrix::rows(std::span<const std::string> ids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), dimension_.value_or(0));
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = at(ids[i]);
  return out;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());

  EmbeddingMatrix out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      // Python's json module writes bare NaN / Infinity tokens.
      if (line.find("NaN") != std::string::npos || line.find("Infinity") != std::string::npos) {
        throw Error(ErrorKind::non_finite_value, where + ": non-finite number in vector");
      }
      throw Error(ErrorKind::schema, where + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string()) {
      throw Error(ErrorKind::schema, where + ": field 'id' must be a string");
    }
    if (!record.contains("vector") || !record["vector"].is_array()) {
      throw Error(ErrorKind::schema, where + ": field 'vector' must be an array");
    }
    const auto& values = record["vector"];
    Eigen::VectorXd vector(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      // JSON has no NaN literal; null stands in for one.
      if (values[i].is_null()) {
        vector[static_cast<Eigen::Index>(i)] = std::numeric_limits<double>::quiet_NaN();
      } else if (values[i].is_number()) {
        vector[static_cast<Eigen::Index>(i)] = values[i].get<double>();
      } else {
        throw Error(ErrorKind::schema, where + ": field 'vector' must hold numbers");
      }
    }
    try {
      out.insert(record["id"].get<std::string>(), vector);
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    }
  }
  return out;
}

void save_embeddings(const EmbeddingMatrix& embeddings, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  for (const auto& id : embeddings.ids()) {
    const auto& v = embeddings.at(id);
    nlohmann::ordered_json record;
    record["id"] = id;
    record["vector"] = std::vector<double>(v.data(), v.data() + v.size());
    out << record.dump() << '\n';
  }
}

}  // namespace ideotrack
