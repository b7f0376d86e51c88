#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polyleon/gadgets.hpp"
#include "polyleon/market.hpp"
#include "polyleon/nash.hpp"
#include "polyleon/ncp.hpp"
#include "polyleon/poly.hpp"
#include "polyleon/reduce.hpp"

// JSON documents. Every writer stamps a "schema" field; readers accept a
// missing field but reject a mismatched one. Rationals travel as "num/den"
// strings (plain integers and decimal strings are accepted on input).
namespace polyleon::io {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kSystemSchema = "polyleon/system@1";
inline constexpr std::string_view kRelationsSchema = "polyleon/relations@1";
inline constexpr std::string_view kMarketSchema = "polyleon/market@1";
inline constexpr std::string_view kCertificateSchema = "polyleon/certificate@1";
inline constexpr std::string_view kTraceSchema = "polyleon/trace@1";
inline constexpr std::string_view kGameSchema = "polyleon/game@1";
inline constexpr std::string_view kPLCMarketSchema = "polyleon/plc-market@1";
inline constexpr std::string_view kCandidateSchema = "polyleon/ncp-candidate@1";
inline constexpr std::string_view kAssignmentSchema = "polyleon/assignment@1";

/// Parses JSON text; syntax errors become Error(Parse) with line and column.
json parse(std::string_view text, std::string_view source = "<input>");
/// Reads a file ("-" is stdin) and parses it.
json read_json(const std::string& path);
std::string read_text(const std::string& path);
/// Pretty-printed with a trailing newline; byte-stable for equal documents.
std::string dump(const json& doc);

/// Schema name of a document, or "" when absent.
std::string schema_of(const json& doc);

json to_json(const Rational& r);
Rational rational_from_json(const json& j);
json to_json(const std::vector<Rational>& v);
std::vector<Rational> rationals_from_json(const json& j);

json polynomial_to_json(const Polynomial& p);
Polynomial polynomial_from_json(const json& j);

json to_json(const PolynomialSystem& system);
PolynomialSystem system_from_json(const json& j);

json to_json(const RelationSystem& relations);
RelationSystem relations_from_json(const json& j);

json to_json(const MarketInstance& market);
MarketInstance market_from_json(const json& j);

json to_json(const Certificate& cert);
Certificate certificate_from_json(const json& j);

json to_json(const GadgetRecord& record);
GadgetRecord record_from_json(const json& j);
json to_json(const GadgetTrace& trace);
GadgetTrace trace_from_json(const json& j);

json to_json(const Game3& game);
Game3 game_from_json(const json& j);

json to_json(const PLCMarket& market);
PLCMarket plc_market_from_json(const json& j);

json to_json(const NCPCandidate& candidate);
NCPCandidate candidate_from_json(const json& j);

/// {"schema": assignment, "z": [...]}; a bare array is accepted on input.
json assignment_to_json(std::span<const Rational> z);
std::vector<Rational> assignment_from_json(const json& j);

json to_json(const VerifyReport& report, const MarketInstance& market);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace polyleon::io
