#include "vemflow/mesh.hpp"
#include "vemflow/mesh_io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

using namespace vemflow;

namespace {

PolygonalMesh two_squares(const BoundarySpec& b = BoundarySpec::all_dirichlet()) {
  return build_mesh({{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}}, {{0, 1, 4, 3}, {1, 2, 5, 4}}, b);
}

}  // namespace

TEST(BuildMesh, DeduplicatesEdges) {
  const auto m = two_squares();
  EXPECT_EQ(m.n_edges(), 7u);
  int interior = 0;
  for (const auto& e : m.edges()) interior += e.on_boundary() ? 0 : 1;
  EXPECT_EQ(interior, 1);
  EXPECT_NEAR(m.total_area(), 2.0, 1e-15);
}

TEST(BuildMesh, ReorientsClockwiseCellsWithWarning) {
  const auto m = build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 3, 2, 1}}, BoundarySpec::all_dirichlet());
  EXPECT_EQ(m.warnings().size(), 1u);
  EXPECT_GT(signed_area(m.cell_points(0)), 0.0);
}

TEST(BuildMesh, RejectsInvalidInput) {
  const auto all = BoundarySpec::all_dirichlet();
  EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {1, 1}}, {{0, 1}}, all), MeshError);
  EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {1, 1}}, {{0, 1, 5}}, all), MeshError);
  // bow-tie
  EXPECT_THROW(build_mesh({{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {{0, 1, 2, 3}}, all), MeshError);
  // unreferenced vertex
  EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {0, 1}, {5, 5}}, {{0, 1, 2}}, all), MeshError);
  // overlapping cells
  EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}, {0, 1, 2}}, all), MeshError);
  // unmarked boundary edge
  BoundarySpec partial;
  partial.dirichlet = {{0, 1}};
  EXPECT_THROW(build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, partial), MeshError);
  // marking an interior edge
  BoundarySpec bad = BoundarySpec::all_dirichlet();
  bad.neumann = {{1, 4}};
  EXPECT_THROW(two_squares(bad), MeshError);
}

TEST(BuildMesh, MixedMarkers) {
  BoundarySpec b;
  b.by_midpoint = [](const Point& x) { return x.x() > 1.99 ? BoundaryMarker::neumann : BoundaryMarker::dirichlet; };
  const auto m = two_squares(b);
  EXPECT_TRUE(m.has_neumann());
  const auto e = m.find_edge(2, 5);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(m.edges()[static_cast<std::size_t>(*e)].marker, BoundaryMarker::neumann);
}

TEST(Generators, DistortedQuadsAreSeededAndValid) {
  const auto a = generate_quadrilateral_distorted(8, 0.3, 42);
  const auto b = generate_quadrilateral_distorted(8, 0.3, 42);
  const auto c = generate_quadrilateral_distorted(8, 0.3, 43);
  EXPECT_EQ(a.vertices(), b.vertices());
  EXPECT_NE(a.vertices(), c.vertices());
  EXPECT_NEAR(a.total_area(), 1.0, 1e-13);
  for (std::size_t i = 0; i < a.n_cells(); ++i) EXPECT_TRUE(is_simple_polygon(a.cell_points(i)));
  EXPECT_THROW(generate_quadrilateral_distorted(4, 0.5, 0), ConfigError);
}

TEST(Generators, Triangles) {
  const auto m = generate_triangular(4);
  EXPECT_EQ(m.n_cells(), 32u);
  EXPECT_NEAR(m.total_area(), 4.0, 1e-13);
  EXPECT_NEAR(m.h(), std::sqrt(2.0) * 0.5, 1e-15);
}

TEST(Regularity, SquareAndSliver) {
  const std::vector<Point> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto r = cell_regularity(sq, 0.2);
  EXPECT_NEAR(r.edge_ratio, 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(r.ball_ratio, 0.5 / std::sqrt(2.0), 1e-14);
  EXPECT_TRUE(r.passes);
  const std::vector<Point> sliver{{0, 0}, {1, 0}, {0.5, 0.01}};
  EXPECT_FALSE(cell_regularity(sliver, 0.1).passes);
  EXPECT_THROW(check_mesh_regularity(two_squares(), 1.5), ConfigError);
}

TEST(Regularity, NonConvexKernelRadius) {
  // arrow: kernel contains a disc, its Chebyshev radius is positive but below the hull's
  const std::vector<Point> arrow{{0, 0}, {2, 0}, {2, 2}, {1, 1.2}, {0, 2}};
  const auto r = cell_regularity(arrow, 0.1);
  EXPECT_FALSE(r.convex);
  EXPECT_GT(r.ball_ratio, 0.1);
  EXPECT_LT(r.ball_ratio, 0.5);
}

TEST(MeshIO, RoundTripIsExact) {
  BoundarySpec b;
  b.by_midpoint = [](const Point& x) { return x.y() > 0.99 ? BoundaryMarker::neumann : BoundaryMarker::dirichlet; };
  const auto m = generate_quadrilateral_distorted(5, 0.25, 3, {}, b);
  const auto path = (std::filesystem::temp_directory_path() / "vemflow_mesh_rt.json").string();
  save_mesh(m, path);
  const auto r = load_mesh(path);
  std::remove(path.c_str());
  EXPECT_EQ(m.vertices(), r.vertices());
  EXPECT_EQ(m.cells(), r.cells());
  ASSERT_EQ(m.n_edges(), r.n_edges());
  for (std::size_t i = 0; i < m.n_edges(); ++i) {
    const auto e = r.find_edge(m.edges()[i].vertices[0], m.edges()[i].vertices[1]);
    ASSERT_TRUE(e.has_value());
    EXPECT_EQ(r.edges()[static_cast<std::size_t>(*e)].marker, m.edges()[i].marker);
  }
}

TEST(MeshIO, MalformedInput) {
  EXPECT_THROW(mesh_from_json(nlohmann::json::parse(R"({"vertices": [[0,0]]})")), MeshError);
  EXPECT_THROW(load_mesh("/nonexistent/mesh.json"), MeshError);
}
