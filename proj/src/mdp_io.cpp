#include "qhrl/mdp_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace qhrl {

using nlohmann::json;

namespace {

const json& member(const json& doc, const std::string& where, const char* key) {
  if (!doc.is_object()) throw SchemaError(where.empty() ? "/" : where, "expected an object");
  auto it = doc.find(key);
  if (it == doc.end()) throw SchemaError(where + "/" + key, "missing field");
  return *it;
}

std::size_t read_size(const json& doc, const std::string& where, const char* key) {
  const json& v = member(doc, where, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw SchemaError(where + "/" + key, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

double read_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw SchemaError(field, "expected a number");
  return v.get<double>();
}

std::vector<double> read_numbers(const json& doc, const std::string& where, const char* key) {
  const json& v = member(doc, where, key);
  const std::string field = where + "/" + key;
  if (!v.is_array()) throw SchemaError(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_number(v[i], field + "/" + std::to_string(i)));
  return out;
}

Eigen::MatrixXd read_matrix(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) throw SchemaError(field, "expected a non-empty matrix");
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_field = field + "/" + std::to_string(r);
    if (!v[r].is_array() || v[r].size() != cols) throw SchemaError(row_field, "ragged matrix row");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          read_number(v[r][c], row_field + "/" + std::to_string(c));
    }
  }
  return m;
}

}  // namespace

json mdp_to_json(const TabularMdp& mdp) {
  const MdpData d = mdp.data();
  return json{{"num_states", d.num_states},
              {"num_actions", d.num_actions},
              {"transition", d.transition},
              {"expected_reward", d.expected_reward},
              {"reward_bound", d.reward_bound}};
}

TabularMdp mdp_from_json(const json& doc, const std::string& where) {
  MdpData d;
  d.num_states = read_size(doc, where, "num_states");
  d.num_actions = read_size(doc, where, "num_actions");
  d.transition = read_numbers(doc, where, "transition");
  d.expected_reward = read_numbers(doc, where, "expected_reward");
  d.reward_bound = read_number(member(doc, where, "reward_bound"), where + "/reward_bound");
  return TabularMdp(d);
}

json qtable_to_json(const QTable& q) {
  json rows = json::array();
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    json row = json::array();
    for (Eigen::Index a = 0; a < q.cols(); ++a) row.push_back(q(s, a));
    rows.push_back(std::move(row));
  }
  return json{{"num_states", q.rows()}, {"num_actions", q.cols()}, {"values", std::move(rows)}};
}

QTable qtable_from_json(const json& doc, const std::string& where) {
  const std::size_t S = read_size(doc, where, "num_states");
  const std::size_t A = read_size(doc, where, "num_actions");
  QTable q = read_matrix(member(doc, where, "values"), where + "/values");
  if (static_cast<std::size_t>(q.rows()) != S || static_cast<std::size_t>(q.cols()) != A) {
    throw SchemaError(where + "/values", "shape does not match num_states x num_actions");
  }
  return q;
}

json values_to_json(const ValueVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json policy_to_json(const StationaryPolicy& policy) {
  if (auto actions = policy.deterministic_actions()) return json(*actions);
  return qtable_to_json(policy.probs())["values"];
}

StationaryPolicy policy_from_json(const json& doc, std::size_t num_actions, const std::string& where) {
  if (!doc.is_array() || doc.empty()) throw SchemaError(where, "expected a list of actions or a matrix");
  try {
    if (doc[0].is_array()) {
      Eigen::MatrixXd probs = read_matrix(doc, where);
      if (static_cast<std::size_t>(probs.cols()) != num_actions) {
        throw SchemaError(where, "expected " + std::to_string(num_actions) + " columns");
      }
      return StationaryPolicy(std::move(probs));
    }
    std::vector<std::size_t> actions;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (!doc[i].is_number_unsigned()) throw SchemaError(where + "/" + std::to_string(i), "expected an action index");
      actions.push_back(doc[i].get<std::size_t>());
    }
    return StationaryPolicy::deterministic(actions, num_actions);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where, e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SchemaError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column),
                      "malformed JSON");
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace qhrl
