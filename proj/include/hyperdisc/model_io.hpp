#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hyperdisc/model.hpp"

namespace hyperdisc {

using json = nlohmann::json;

inline json to_json_matrix(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json_vector(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Mat matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw InvalidInput("field '" + field + "' must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw InvalidInput("field '" + field + "' must be an array of arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InvalidInput("field '" + field + "' row " + std::to_string(r) + " has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw InvalidInput("field '" + field + "' entry [" + std::to_string(r) + "][" + std::to_string(c) +
                           "] is not a number");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

inline Vec vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw InvalidInput("field '" + field + "' must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput("field '" + field + "' entry " + std::to_string(i) + " is not a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json pairs_to_json(const std::vector<EqualityPair>& pairs) {
  json out = json::array();
  for (const auto& p : pairs) out.push_back({p.k, p.l, p.x1, p.x2});
  return out;
}

inline std::vector<EqualityPair> pairs_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("field 'equality_pairs' must be an array");
  std::vector<EqualityPair> out;
  for (std::size_t n = 0; n < j.size(); ++n) {
    const auto& e = j[n];
    if (!e.is_array() || e.size() != 4 || !std::all_of(e.begin(), e.end(), [](const json& v) { return v.is_number_integer(); }))
      throw InvalidInput("field 'equality_pairs' entry " + std::to_string(n) + " must be 4 integers");
    out.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>()});
  }
  return out;
}

inline json model_to_json(const ModelSpec& m) {
  json j;
  j["num_states"] = m.num_states;
  j["num_actions"] = m.num_actions;
  j["horizon"] = m.horizon;
  j["beta"] = m.beta;
  j["delta"] = m.delta;
  j["utility"] = to_json_matrix(m.utility);
  json trans = json::array();
  for (const auto& f : m.transitions) trans.push_back(to_json_matrix(f));
  j["transitions"] = std::move(trans);
  j["state_values"] = to_json_vector(m.state_values);
  j["equality_pairs"] = pairs_to_json(m.equality_pairs);
  return j;
}

namespace detail {
template <class T>
T required(const json& j, const char* field) {
  if (!j.contains(field)) throw InvalidInput(std::string("missing field '") + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string("field '") + field + "' has the wrong type");
  }
}
}  // namespace detail

/// Parses and validates a model document. All errors are InvalidInput.
inline ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("model document must be a JSON object");
  ModelSpec m;
  m.num_states = detail::required<int>(j, "num_states");
  m.num_actions = detail::required<int>(j, "num_actions");
  m.horizon = detail::required<int>(j, "horizon");
  m.beta = detail::required<double>(j, "beta");
  m.delta = detail::required<double>(j, "delta");
  if (!j.contains("utility")) throw InvalidInput("missing field 'utility'");
  m.utility = matrix_from_json(j["utility"], "utility");
  if (!j.contains("transitions") || !j["transitions"].is_array())
    throw InvalidInput("missing or malformed field 'transitions'");
  for (std::size_t i = 0; i < j["transitions"].size(); ++i)
    m.transitions.push_back(matrix_from_json(j["transitions"][i], "transitions[" + std::to_string(i) + "]"));
  if (j.contains("state_values")) {
    m.state_values = vector_from_json(j["state_values"], "state_values");
  } else {
    m.state_values = Vec::LinSpaced(std::max(m.num_states, 1), 0.0, std::max(m.num_states - 1, 0));
  }
  if (j.contains("equality_pairs")) m.equality_pairs = pairs_from_json(j["equality_pairs"]);
  m.validate();
  return m;
}

/// Parse errors carry nlohmann's byte position; rethrown as InvalidInput.
inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // count lines up to the failing byte so the message points somewhere useful
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw InvalidInput(source + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::ios_base::failure("write to '" + path + "' failed");
}

inline ModelSpec load_model(const std::string& path) {
  return model_from_json(parse_json_text(read_text_file(path), path));
}

inline void save_model(const std::string& path, const ModelSpec& m) {
  write_text_file(path, model_to_json(m).dump(2) + "\n");
}

}  // namespace hyperdisc
