// model_io.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>

#include <json.hpp>

#include "ioutil.hpp"
#include "nnasr/error.hpp"
#include "nnasr/model.hpp"

namespace nnasr {

using nlohmann::json;

namespace {

std::string num_array(const std::vector<double>& v) {
  std::string out = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_g17(v[i]);
  }
  out += "]";
  return out;
}

std::vector<double> get_num_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw FormatError(path + ": expected array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw FormatError(path + ": expected number");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

std::string model_set_to_json(const ModelSet& set) {
  std::ostringstream out;
  out << "{\n  \"dim\": " << set.dim << ",\n  \"phones\": [\n";
  for (size_t p = 0; p < set.inventory.size(); ++p) {
    const PhoneHmm& m = set.models.at(set.inventory[p].id);
    out << "    {\"id\": " << json(m.phone.id).dump()
        << ", \"lang\": \"" << lang_name(m.phone.lang) << "\",\n     \"states\": [\n";
    for (int s = 0; s < m.num_states(); ++s) {
      out << "       {\"components\": [";
      for (size_t k = 0; k < m.states[s].components.size(); ++k) {
        const GaussianComponent& c = m.states[s].components[k];
        if (k) out << ",\n                       ";
        out << "{\"weight\": " << format_g17(c.weight)
            << ", \"mean\": " << num_array(c.mean)
            << ", \"var\": " << num_array(c.var) << "}";
      }
      out << "]}";
      out << (s + 1 < m.num_states() ? ",\n" : "\n");
    }
    out << "     ],\n     \"trans\": [";
    for (size_t i = 0; i < m.trans.size(); ++i) {
      if (i) out << ",\n               ";
      out << num_array(m.trans[i]);
    }
    out << "]}";
    out << (p + 1 < set.inventory.size() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

ModelSet model_set_from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("dim") || !j.contains("phones"))
    throw FormatError(origin + ": expected object with dim and phones");
  ModelSet set;
  set.dim = j.at("dim").get<int>();
  if (!j.at("phones").is_array()) throw FormatError(origin + ": phones must be an array");
  size_t pi = 0;
  for (const auto& jp : j.at("phones")) {
    const std::string ppath = origin + ": phones[" + std::to_string(pi) + "]";
    PhoneHmm m;
    if (!jp.contains("id") || !jp.at("id").is_string())
      throw FormatError(ppath + ".id: missing or not a string");
    m.phone.id = jp.at("id").get<std::string>();
    m.phone.lang = parse_lang(jp.value("lang", "L2"));
    if (!jp.contains("states")) throw FormatError(ppath + ".states: missing");
    size_t si = 0;
    for (const auto& js : jp.at("states")) {
      GmmState st;
      size_t ki = 0;
      if (!js.contains("components")) throw FormatError(ppath + ".states[" + std::to_string(si) + "].components: missing");
      for (const auto& jc : js.at("components")) {
        const std::string cpath = ppath + ".states[" + std::to_string(si) +
                                  "].components[" + std::to_string(ki) + "]";
        GaussianComponent c;
        if (!jc.contains("weight") || !jc.at("weight").is_number())
          throw FormatError(cpath + ".weight: missing or not a number");
        c.weight = jc.at("weight").get<double>();
        c.mean = get_num_array(jc.at("mean"), cpath + ".mean");
        c.var = get_num_array(jc.at("var"), cpath + ".var");
        st.components.push_back(std::move(c));
        ++ki;
      }
      m.states.push_back(std::move(st));
      ++si;
    }
    if (!jp.contains("trans")) throw FormatError(ppath + ".trans: missing");
    size_t ri = 0;
    for (const auto& jr : jp.at("trans")) {
      m.trans.push_back(get_num_array(jr, ppath + ".trans[" + std::to_string(ri) + "]"));
      ++ri;
    }
    set.inventory.push_back(m.phone);
    if (!set.models.emplace(m.phone.id, std::move(m)).second)
      throw FormatError(ppath + ": duplicate phone id");
    ++pi;
  }
  try {
    set.validate();
  } catch (const FormatError& e) {
    throw FormatError(origin + ": " + e.what());
  }
  return set;
}

ModelSet load_model_set(const std::string& path) {
  return model_set_from_json(read_text_file(path), path);
}

void save_model_set(const ModelSet& set, const std::string& path) {
  set.validate();
  write_text_file_atomic(path, model_set_to_json(set));
}

FeatureMatrix load_features(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_text_file(path));
  if (lines.empty()) throw FormatError(path + ": empty feature file");
  std::vector<std::string> head = split_ws(lines[0]);
  if (head.size() != 3 || head[0] != "FEAT1")
    throw FormatError(path + ":1: expected header 'FEAT1 D T'");
  FeatureMatrix f;
  f.dim = static_cast<int>(parse_long(head[1], path + ":1"));
  f.frames = static_cast<int>(parse_long(head[2], path + ":1"));
  if (f.dim <= 0 || f.frames < 1) throw FormatError(path + ":1: bad dimensions");
  f.data.reserve(static_cast<size_t>(f.dim) * f.frames);
  int row = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> toks = split_ws(lines[i]);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (static_cast<int>(toks.size()) != f.dim)
      throw FormatError(where + ": expected " + std::to_string(f.dim) + " values");
    for (const std::string& t : toks) f.data.push_back(parse_double(t, where));
    ++row;
  }
  if (row != f.frames)
    throw FormatError(path + ": header promises " + std::to_string(f.frames) +
                      " frames, found " + std::to_string(row));
  try {
    f.validate();
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return f;
}

void save_features(const FeatureMatrix& feats, const std::string& path) {
  feats.validate();
  std::string out = "FEAT1 " + std::to_string(feats.dim) + " " + std::to_string(feats.frames) + "\n";
  for (int t = 0; t < feats.frames; ++t) {
    const double* row = feats.frame(t);
    for (int d = 0; d < feats.dim; ++d) {
      if (d) out += " ";
      out += format_g17(row[d]);
    }
    out += "\n";
  }
  write_text_file_atomic(path, out);
}

Transcription load_labels(const std::string& path, double* score) {
  Transcription trans;
  std::vector<std::string> lines = split_lines(read_text_file(path));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    std::vector<std::string> toks = split_ws(lines[i]);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (toks.size() == 2 && toks[0] == "score") {
      if (score) *score = parse_double(toks[1], where);
      continue;
    }
    if (toks.size() != 3) throw FormatError(where + ": expected 'start end phone'");
    Segment s;
    s.start = static_cast<int>(parse_long(toks[0], where));
    s.end = static_cast<int>(parse_long(toks[1], where));
    s.phone = toks[2];
    trans.segments.push_back(std::move(s));
  }
  try {
    trans.validate();
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return trans;
}

void save_labels(const Transcription& trans, const std::string& path, const double* score) {
  trans.validate();
  std::string out;
  for (const Segment& s : trans.segments)
    out += std::to_string(s.start) + " " + std::to_string(s.end) + " " + s.phone + "\n";
  if (score) out += "score " + format_g17(*score) + "\n";
  write_text_file_atomic(path, out);
}

}  // namespace nnasr
