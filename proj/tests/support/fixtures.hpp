#pragma once
// Shared systems with planted rational roots, written in the text form the
// tool reads.

#include <string>
#include <vector>

#include "polyleon/io.hpp"

namespace fixtures {

struct Planted {
    std::string name;
    std::string json;
    std::vector<std::string> root;

    polyleon::PolynomialSystem system() const { return polyleon::io::system_from_json(polyleon::io::parse(json)); }
    std::vector<polyleon::Rational> z() const {
        std::vector<polyleon::Rational> out;
        for (auto& s : root) out.push_back(polyleon::Rational::parse(s));
        return out;
    }
};

inline std::vector<Planted> planted_systems() {
    return {
        {"worked_example",
         R"({"vars":2,"bounds":[["0","2"],["0","2"]],"polys":[[{"c":"4","e":{"1":2,"2":1}},{"c":"3","e":{"1":1,"2":1}},{"c":"-1","e":{"1":1}},{"c":"-2"}]]})",
         {"1", "3/7"}},
        {"identity", R"({"vars":2,"bounds":[["0","2"],["0","2"]],"polys":[[{"c":"1","e":{"1":1}},{"c":"-1","e":{"2":1}}]]})",
         {"1", "1"}},
        {"square", R"({"vars":1,"bounds":[["0","2"]],"polys":[[{"c":"1","e":{"1":2}},{"c":"-9/4"}]]})", {"3/2"}},
        {"product", R"({"vars":3,"bounds":[["0","1"],["0","1"],["0","1"]],"polys":[[{"c":"1","e":{"1":1,"2":1}},{"c":"-1","e":{"3":1}}]]})",
         {"1/2", "1/2", "1/4"}},
        {"linear_pair",
         R"({"vars":2,"bounds":[["0","1"],["0","1"]],"polys":[[{"c":"1","e":{"1":1}},{"c":"1","e":{"2":1}},{"c":"-1"}],[{"c":"1","e":{"1":1}},{"c":"-2","e":{"2":1}}]]})",
         {"2/3", "1/3"}},
        {"cube", R"({"vars":1,"bounds":[["0","1"]],"polys":[[{"c":"1","e":{"1":3}},{"c":"-1/8"}]]})", {"1/2"}},
        {"sum_product",
         R"({"vars":2,"bounds":[["0","1"],["0","1"]],"polys":[[{"c":"1","e":{"1":1,"2":1}},{"c":"-1/6"}],[{"c":"1","e":{"1":1}},{"c":"1","e":{"2":1}},{"c":"-5/6"}]]})",
         {"1/2", "1/3"}},
        {"four_vars",
         R"({"vars":4,"bounds":[["0","1"],["0","1"],["0","1"],["0","1"]],"polys":[[{"c":"1","e":{"1":1,"2":1}},{"c":"-1","e":{"3":1,"4":1}}],[{"c":"1","e":{"1":1}},{"c":"1","e":{"4":1}},{"c":"-1"}],[{"c":"1","e":{"2":1}},{"c":"-2/3"}],[{"c":"1","e":{"3":1}},{"c":"-1/3"}]]})",
         {"1/3", "2/3", "1/3", "2/3"}},
        {"mixed_cubic",
         R"({"vars":3,"bounds":[["0","2"],["0","2"],["0","2"]],"polys":[[{"c":"3","e":{"1":2,"2":1}},{"c":"-2","e":{"3":1}},{"c":"1/2"}],[{"c":"1","e":{"1":1}},{"c":"-1/2"}],[{"c":"1","e":{"2":1}},{"c":"-2"}]]})",
         {"1/2", "2", "1"}},
        {"circle_line",
         R"({"vars":2,"bounds":[["0","1"],["0","1"]],"polys":[[{"c":"1","e":{"1":2}},{"c":"1","e":{"2":2}},{"c":"-1"}],[{"c":"4","e":{"1":1}},{"c":"-3","e":{"2":1}}]]})",
         {"3/5", "4/5"}},
        {"triple_product",
         R"({"vars":4,"bounds":[["0","1"],["0","1"],["0","1"],["0","1"]],"polys":[[{"c":"1","e":{"1":1,"2":1,"3":1}},{"c":"-1","e":{"4":1}}],[{"c":"1","e":{"1":1}},{"c":"-1"}],[{"c":"2","e":{"2":1}},{"c":"-1"}],[{"c":"4","e":{"3":1}},{"c":"-3"}]]})",
         {"1", "1/2", "3/4", "3/8"}},
        {"fraction_coefs",
         R"({"vars":2,"bounds":[["0","1"],["0","1"]],"polys":[[{"c":"7/3","e":{"1":2}},{"c":"-1","e":{"2":1}}],[{"c":"7","e":{"1":1}},{"c":"-3"}]]})",
         {"3/7", "3/7"}},
        {"lower_bounds",
         R"({"vars":2,"bounds":[["1/2","2"],["1","3"]],"polys":[[{"c":"1","e":{"1":1,"2":1}},{"c":"-3"}],[{"c":"3","e":{"2":1}},{"c":"-4","e":{"1":1}}]]})",
         {"3/2", "2"}},
    };
}

}  // namespace fixtures
