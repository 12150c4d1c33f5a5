#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "perishable/errors.hpp"
#include "perishable/instance.hpp"

namespace perishable {

// Instance files: {"bidders":[{"id":"<string>","bids":[<number>,...]},...]}

inline nlohmann::json to_json(const BidProfile& profile) {
  nlohmann::json bidders = nlohmann::json::array();
  for (const auto& b : profile.bidders()) {
    bidders.push_back({{"id", b.id}, {"bids", b.bids}});
  }
  return {{"bidders", std::move(bidders)}};
}

/// Canonical text form: bidders sorted by id, two-space indent, trailing newline.
inline std::string serialize_instance(const BidProfile& profile) { return to_json(profile).dump(2) + "\n"; }

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline BidProfile profile_from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& where, const std::string& what) {
    throw Error(ErrorCode::kParseError, where + ": " + what);
  };
  if (!doc.is_object() || !doc.contains("bidders")) fail("$", "expected an object with a \"bidders\" array");
  const auto& arr = doc.at("bidders");
  if (!arr.is_array()) fail("$.bidders", "expected an array");

  std::vector<Bidder> bidders;
  bidders.reserve(arr.size());
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = "$.bidders[" + std::to_string(k) + "]";
    const auto& entry = arr[k];
    if (!entry.is_object()) fail(where, "expected an object");
    if (!entry.contains("id") || !entry.at("id").is_string()) fail(where + ".id", "expected a string");
    if (!entry.contains("bids") || !entry.at("bids").is_array()) fail(where + ".bids", "expected an array");
    Bidder bidder;
    bidder.id = entry.at("id").get<std::string>();
    const auto& bids = entry.at("bids");
    for (std::size_t p = 0; p < bids.size(); ++p) {
      const std::string at = where + ".bids[" + std::to_string(p) + "]";
      if (!bids[p].is_number()) fail(at, "expected a number");
      const double bid = bids[p].get<double>();
      if (!std::isfinite(bid) || bid <= 0.0) {
        throw Error(ErrorCode::kInvalidBid, at + ": bid must be finite and positive");
      }
      if (p > 0 && bid > bidder.bids.back()) {
        throw Error(ErrorCode::kInvalidBid, at + ": marginal bids must be non-increasing");
      }
      bidder.bids.push_back(bid);
    }
    bidders.push_back(std::move(bidder));
  }
  return BidProfile(std::move(bidders));
}

inline BidProfile parse_instance(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  return profile_from_json(doc);
}

inline BidProfile load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open instance file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_instance(buffer.str());
}

inline void save_instance(const BidProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidConfig, "cannot write instance file '" + path + "'");
  out << serialize_instance(profile);
}

}  // namespace perishable
