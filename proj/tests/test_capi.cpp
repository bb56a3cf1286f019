// Exercises the C interface through the shared library, the same boundary
// the CLI uses: handle lifecycles, status mapping, buffer conventions.
#include <cmath>
#include <cstring>
#include <string>

#include "cocyclelab.h"
#include "doctest.h"

namespace {

const long long kCat[4] = {2, 1, 1, 1};

struct SystemHandle {
  clab_system* sys = nullptr;
  SystemHandle() { REQUIRE(clab_system_create(kCat, 2, 0.0, &sys) == CLAB_OK); }
  ~SystemHandle() { clab_system_destroy(sys); }
};

const char* kDiagField = R"({
  "dimension": 2, "base_dimension": 2,
  "constant_factor": [2, 0, 0, 0.5],
  "terms": []
})";

}  // namespace

TEST_CASE("version and error-state defaults") {
  CHECK(std::string(clab_version()) == "0.1.0");
  CHECK(std::string(clab_last_error_message()).empty());
}

TEST_CASE("system lifecycle, eigendata, and stepping") {
  SystemHandle h;
  CHECK(clab_system_dim(h.sys) == 2);
  CHECK(std::abs(clab_system_nu_hat(h.sys) - (3.0 + std::sqrt(5.0)) / 2.0) <
        1e-12);
  CHECK(std::abs(clab_system_nu(h.sys) - (3.0 - std::sqrt(5.0)) / 2.0) <
        1e-12);

  double x[2] = {0.5, 0.5};
  double y[2];
  REQUIRE(clab_system_step(h.sys, x, 1, y) == CLAB_OK);
  CHECK(y[0] == doctest::Approx(0.5));
  CHECK(y[1] == doctest::Approx(0.0));

  double x2[2] = {0.1, 0.2};
  double fwd[2], back[2];
  REQUIRE(clab_system_step(h.sys, x2, 7, fwd) == CLAB_OK);
  REQUIRE(clab_system_step(h.sys, fwd, -7, back) == CLAB_OK);
  CHECK(std::abs(back[0] - 0.1) < 1e-10);
  CHECK(std::abs(back[1] - 0.2) < 1e-10);
}

TEST_CASE("system creation failures map to the right status") {
  clab_system* sys = nullptr;
  const long long doubled[4] = {2, 0, 0, 2};
  CHECK(clab_system_create(doubled, 2, 0.0, &sys) == CLAB_ERR_NOT_UNIMODULAR);
  CHECK(clab_last_error_code() == CLAB_ERR_NOT_UNIMODULAR);
  CHECK(std::strlen(clab_last_error_message()) > 0);

  const long long shear[4] = {1, 1, 0, 1};
  CHECK(clab_system_create(shear, 2, 0.0, &sys) == CLAB_ERR_NOT_HYPERBOLIC);
  CHECK(clab_system_create(nullptr, 2, 0.0, &sys) ==
        CLAB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("cocycle evaluation, iteration, Lyapunov spectrum") {
  SystemHandle h;
  clab_cocycle* coc = nullptr;
  REQUIRE(clab_cocycle_create(h.sys, kDiagField, &coc) == CLAB_OK);
  CHECK(clab_cocycle_dimension(coc) == 2);

  double x[2] = {0.3, 0.7};
  double m[4];
  REQUIRE(clab_cocycle_evaluate(coc, x, m) == CLAB_OK);
  CHECK(m[0] == doctest::Approx(2.0));
  CHECK(m[1] == doctest::Approx(0.0));
  CHECK(m[3] == doctest::Approx(0.5));

  REQUIRE(clab_cocycle_iterate(coc, x, 3, m) == CLAB_OK);
  CHECK(m[0] == doctest::Approx(8.0));
  CHECK(m[3] == doctest::Approx(0.125));
  REQUIRE(clab_cocycle_iterate(coc, x, -2, m) == CLAB_OK);
  CHECK(m[0] == doctest::Approx(0.25));
  CHECK(m[3] == doctest::Approx(4.0));

  double spec[2];
  REQUIRE(clab_lyapunov_spectrum(coc, x, 2000, spec) == CLAB_OK);
  CHECK(std::abs(spec[0] - std::log(2.0)) < 1e-9);
  CHECK(std::abs(spec[1] + std::log(2.0)) < 1e-9);

  clab_cocycle_destroy(coc);
}

TEST_CASE("holonomy across the C boundary") {
  SystemHandle h;
  // Fiber-bunched constant cocycle (diag(2, 1/2) would rightly be refused:
  // its distortion outruns the base contraction). Products at x and y
  // coincide, so the holonomy is the identity.
  clab_cocycle* coc = nullptr;
  const char* bunched = R"({
    "dimension": 2, "base_dimension": 2,
    "constant_factor": [1.1, 0, 0, 0.9090909090909091],
    "terms": []
  })";
  REQUIRE(clab_cocycle_create(h.sys, bunched, &coc) == CLAB_OK);

  double x[2] = {0.3, 0.7};
  const double nu = (3.0 - std::sqrt(5.0)) / 2.0;
  double v[2] = {1.0, nu - 2.0};
  const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1]);
  double y[2] = {x[0] + 0.05 * v[0] / norm, x[1] + 0.05 * v[1] / norm};
  double hmat[4];
  REQUIRE(clab_stable_holonomy(coc, x, y, 1e-10, 2000, hmat) == CLAB_OK);
  CHECK(std::abs(hmat[0] - 1.0) < 1e-9);
  CHECK(std::abs(hmat[1]) < 1e-9);
  CHECK(std::abs(hmat[2]) < 1e-9);
  CHECK(std::abs(hmat[3] - 1.0) < 1e-9);

  // Unstable transport over an unstable-leaf pair.
  const double nu_hat = (3.0 + std::sqrt(5.0)) / 2.0;
  double vu[2] = {1.0, nu_hat - 2.0};
  const double un = std::sqrt(vu[0] * vu[0] + vu[1] * vu[1]);
  double yu[2] = {x[0] + 0.05 * vu[0] / un, x[1] + 0.05 * vu[1] / un};
  REQUIRE(clab_unstable_holonomy(coc, x, yu, 1e-10, 2000, hmat) == CLAB_OK);
  CHECK(std::abs(hmat[0] - 1.0) < 1e-9);
  CHECK(std::abs(hmat[3] - 1.0) < 1e-9);

  // Off-leaf pair is rejected.
  double z[2] = {x[0] + 0.05, x[1] + 0.05};
  CHECK(clab_stable_holonomy(coc, x, z, 1e-10, 2000, hmat) ==
        CLAB_ERR_LEAF_MISMATCH);

  clab_cocycle_destroy(coc);
}

TEST_CASE("cocycle creation rejects malformed JSON") {
  SystemHandle h;
  clab_cocycle* coc = nullptr;
  CHECK(clab_cocycle_create(h.sys, "{not json", &coc) == CLAB_ERR_IO);
  CHECK(std::strlen(clab_last_error_message()) > 0);
}

TEST_CASE("scenario listing and run through the C boundary") {
  CHECK(clab_scenario_count() == 5);
  CHECK(clab_scenario_name(-1) == nullptr);
  CHECK(clab_scenario_name(99) == nullptr);
  bool saw_pw = false;
  for (int i = 0; i < clab_scenario_count(); ++i)
    if (std::string(clab_scenario_name(i)) == "pw-demo") saw_pw = true;
  CHECK(saw_pw);

  int exit_code = -1;
  char failing[128];
  std::memset(failing, 'x', sizeof failing);
  const uint64_t seed = 7;
  REQUIRE(clab_run_scenario("twist-verify", nullptr, "capi_out", &seed, 1,
                            &exit_code, failing, sizeof failing) == CLAB_OK);
  CHECK(exit_code == 0);
  CHECK(failing[0] == '\0');

  CHECK(clab_run_scenario("no-such", nullptr, "capi_out", nullptr, 1,
                          &exit_code, failing, sizeof failing) ==
        CLAB_ERR_INVALID_ARGUMENT);

  CHECK(clab_run_scenario("twist-verify", R"({"mystery_key": 1})", "capi_out",
                          nullptr, 1, &exit_code, failing, sizeof failing) ==
        CLAB_ERR_CONFIG);
  CHECK(std::string(clab_last_error_message()).find("mystery_key") !=
        std::string::npos);
}
