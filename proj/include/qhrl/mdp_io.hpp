#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "qhrl/mdp.hpp"

namespace qhrl {

/// A JSON document that parses but does not follow the expected schema.
/// `field` is a JSON-pointer-like path to the offending member.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Field layout is documented in docs/schema.md.

nlohmann::json mdp_to_json(const TabularMdp& mdp);
/// Throws SchemaError for missing/mistyped fields and InvalidMdp for broken invariants.
TabularMdp mdp_from_json(const nlohmann::json& doc, const std::string& where = "");

nlohmann::json qtable_to_json(const QTable& q);
QTable qtable_from_json(const nlohmann::json& doc, const std::string& where = "");

nlohmann::json values_to_json(const ValueVector& v);

nlohmann::json policy_to_json(const StationaryPolicy& policy);
/// Accepts either a list of action indices (deterministic) or a matrix of
/// probabilities.
StationaryPolicy policy_from_json(const nlohmann::json& doc, std::size_t num_actions,
                                  const std::string& where = "");

/// Reads a JSON file. Parse failures are reported as SchemaError with the
/// line and column of the error.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace qhrl
