#pragma once

// JSON mesh format:
//   {"vertices": [[x, y], ...],
//    "cells": [[i0, i1, ...], ...],
//    "boundary": {"dirichlet": [[a, b], ...], "neumann": [[a, b], ...]}}
// with every boundary edge listed once under its canonical key [min, max].

#include "vemflow/mesh.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace vemflow {

inline nlohmann::json mesh_to_json(const PolygonalMesh& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices()) j["vertices"].push_back({v.x(), v.y()});
  j["cells"] = mesh.cells();
  nlohmann::json dir = nlohmann::json::array(), neu = nlohmann::json::array();
  for (const auto& e : mesh.edges()) {
    if (e.marker == BoundaryMarker::dirichlet) dir.push_back({e.vertices[0], e.vertices[1]});
    if (e.marker == BoundaryMarker::neumann) neu.push_back({e.vertices[0], e.vertices[1]});
  }
  j["boundary"] = {{"dirichlet", dir}, {"neumann", neu}};
  return j;
}

inline PolygonalMesh mesh_from_json(const nlohmann::json& j) {
  try {
    std::vector<Point> verts;
    for (const auto& v : j.at("vertices")) {
      if (v.size() != 2) throw MeshError("vertex entry must have two coordinates");
      verts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    }
    auto cells = j.at("cells").get<std::vector<std::vector<int>>>();
    BoundarySpec spec;
    if (j.contains("boundary")) {
      const auto& b = j.at("boundary");
      auto keys = [](const nlohmann::json& list) {
        std::vector<EdgeKey> out;
        for (const auto& k : list) {
          if (k.size() != 2) throw MeshError("edge key must have two vertex indices");
          out.push_back(edge_key(k.at(0).get<int>(), k.at(1).get<int>()));
        }
        return out;
      };
      if (b.contains("dirichlet")) spec.dirichlet = keys(b.at("dirichlet"));
      if (b.contains("neumann")) spec.neumann = keys(b.at("neumann"));
    }
    return build_mesh(std::move(verts), std::move(cells), spec);
  } catch (const nlohmann::json::exception& e) {
    throw MeshError(std::string("malformed mesh JSON: ") + e.what());
  }
}

inline void save_mesh(const PolygonalMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path);
  // max_digits10 keeps coordinates bit-exact through a save/load cycle
  out << std::setprecision(17) << mesh_to_json(mesh).dump() << '\n';
}

inline PolygonalMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw MeshError("cannot parse mesh file " + path + ": " + e.what());
  }
  return mesh_from_json(j);
}

}  // namespace vemflow
