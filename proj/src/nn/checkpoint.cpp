#include "agility/nn/checkpoint.hpp"

#include <fstream>

#include "agility/error.hpp"

namespace agility::nn {

nlohmann::json to_checkpoint(const ParamList& params) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& p : params) {
    doc[p.name] = {{"shape", p.value->shape()}, {"data", p.value->storage()}};
  }
  return doc;
}

void from_checkpoint(const nlohmann::json& doc, const ParamList& params) {
  for (const auto& p : params) {
    if (!doc.contains(p.name)) {
      throw ParseError("checkpoint is missing parameter '" + p.name + "'", 1);
    }
    const auto& entry = doc.at(p.name);
    auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    auto data = entry.at("data").get<std::vector<double>>();
    if (shape != p.value->shape()) {
      throw DimensionError("checkpoint shape mismatch for '" + p.name + "'");
    }
    *p.value = Tensor(std::move(shape), std::move(data));
  }
}

void save_checkpoint(const ParamList& params,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << to_checkpoint(params).dump() << '\n';
}

void load_checkpoint(const std::filesystem::path& path,
                     const ParamList& params) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 1);
  }
  from_checkpoint(doc, params);
}

}  // namespace agility::nn
