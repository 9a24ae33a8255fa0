// Exercises the shared library through its C interface only.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "warpbridge/warpbridge.h"

using nlohmann::json;

namespace {

// Takes ownership of a library-allocated string.
std::string take(char* s) {
    REQUIRE(s != nullptr);
    std::string out(s);
    wb_string_free(s);
    return out;
}

const char* kTrimodal = R"({"preset": "trimodal_gaussian_1d"})";

struct Fixture {
    wb_target* target = nullptr;
    wb_samples* draws = nullptr;
    Fixture() {
        REQUIRE(wb_target_from_json(kTrimodal, &target) == WB_OK);
        REQUIRE(wb_target_sample(target, 2000, 17, &draws) == WB_OK);
    }
    ~Fixture() {
        wb_samples_free(draws);
        wb_target_free(target);
    }
};

} // namespace

TEST_CASE("version and null handling") {
    CHECK(std::string(wb_version()).size() > 0);
    wb_samples_free(nullptr);
    wb_mixture_free(nullptr);
    wb_target_free(nullptr);
    wb_string_free(nullptr);
    CHECK(wb_samples_create(1, 1, nullptr, nullptr) == WB_ERR_INVALID_ARGUMENT);
    CHECK(std::string(wb_last_error()).size() > 0);
}

TEST_CASE("sample sets and CSV round trip") {
    const std::vector<double> v = {0.1, -2.5, 1.0 / 3.0, 1e-300, -7.25, 6.02214076e23};
    wb_samples* s = nullptr;
    REQUIRE(wb_samples_create(2, 3, v.data(), &s) == WB_OK);
    CHECK(wb_samples_size(s) == 3);
    CHECK(wb_samples_dim(s) == 2);
    const auto path = (std::filesystem::temp_directory_path() / "wb_c_api_roundtrip.csv").string();
    REQUIRE(wb_samples_write_csv(s, path.c_str()) == WB_OK);
    wb_samples* back = nullptr;
    REQUIRE(wb_samples_read_csv(path.c_str(), &back) == WB_OK);
    REQUIRE(wb_samples_size(back) == 3);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(wb_samples_data(back)[i] == v[i]);
    std::remove(path.c_str());

    wb_samples* none = nullptr;
    CHECK(wb_samples_read_csv("/nonexistent/dir/x.csv", &none) == WB_ERR_IO);
    CHECK(none == nullptr);
    CHECK(wb_samples_create(0, 3, v.data(), &none) == WB_ERR_INVALID_ARGUMENT);
    wb_samples_free(back);
    wb_samples_free(s);
}

TEST_CASE("mixtures") {
    wb_mixture* m = nullptr;
    REQUIRE(wb_mixture_from_json(R"({"dim": 1, "K": 1, "weights": [1], "means": [[0]], "scales": [[1]]})", &m) ==
            WB_OK);
    double lp = 0.0;
    const double zero = 0.0;
    REQUIRE(wb_mixture_log_pdf(m, &zero, 1, &lp) == WB_OK);
    CHECK(lp == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
    const double two[2] = {0.0, 0.0};
    CHECK(wb_mixture_log_pdf(m, two, 2, &lp) == WB_ERR_DIMENSION_MISMATCH);

    char* text = nullptr;
    REQUIRE(wb_mixture_to_json(m, &text) == WB_OK);
    const std::string first = take(text);
    wb_mixture* again = nullptr;
    REQUIRE(wb_mixture_from_json(first.c_str(), &again) == WB_OK);
    REQUIRE(wb_mixture_to_json(again, &text) == WB_OK);
    CHECK(take(text) == first);

    wb_mixture* bad = nullptr;
    CHECK(wb_mixture_from_json(R"({"dim": 1, "K": 1, "weights": [1], "means": [[0]], "scales": [[-1]]})", &bad) ==
          WB_ERR_INVALID_ARGUMENT);
    CHECK(wb_mixture_from_json("{", &bad) == WB_ERR_INVALID_ARGUMENT);
    CHECK(bad == nullptr);
    wb_mixture_free(again);
    wb_mixture_free(m);
}

TEST_CASE("fit, transform and estimate") {
    Fixture f;
    wb_mixture* mix = nullptr;
    char* fit = nullptr;
    REQUIRE(wb_fit(f.draws, R"({"K": 3})", 5, 2, &mix, &fit) == WB_OK);
    const auto fit_json = json::parse(take(fit));
    CHECK(fit_json.contains("loglik"));
    CHECK(wb_mixture_dim(mix) == 1);

    wb_samples* warped = nullptr;
    std::vector<int> psi(wb_samples_size(f.draws));
    REQUIRE(wb_transform(mix, f.draws, 9, 2, &warped, psi.data()) == WB_OK);
    CHECK(wb_samples_size(warped) == wb_samples_size(f.draws));
    for (int k : psi) CHECK((k >= 1 && k <= 3));
    wb_samples_free(warped);

    char* report = nullptr;
    char* timings = nullptr;
    REQUIRE(wb_estimate(f.target, f.draws, R"({"estimator": "warpu", "K": 3})", 21, &report, &timings) == WB_OK);
    const std::string report_text = take(report);
    const auto r = json::parse(report_text);
    const auto t = json::parse(take(timings));
    CHECK(std::abs(r["lambda_hat"].get<double>() - 2.0) < 5.0 * std::sqrt(r["variance_hat"].get<double>()));
    CHECK(t.contains("t_total"));
    CHECK_FALSE(r.contains("t_total"));

    // Same seed, same bytes.
    REQUIRE(wb_estimate(f.target, f.draws, R"({"estimator": "warpu", "K": 3})", 21, &report, nullptr) == WB_OK);
    CHECK(take(report) == report_text);

    CHECK(wb_estimate(f.target, f.draws, R"({"estimator": "warpu", "K": 3, "bogus": 1})", 21, &report, nullptr) ==
          WB_ERR_INVALID_ARGUMENT);
    CHECK(std::string(wb_last_error()).find("bogus") != std::string::npos);
    CHECK(wb_estimate(f.target, f.draws, R"({"K": 5000})", 21, &report, nullptr) == WB_ERR_INVALID_ARGUMENT);
    wb_mixture_free(mix);
}

TEST_CASE("direct ratio on identical inputs is exactly zero") {
    Fixture f;
    char* report = nullptr;
    REQUIRE(wb_estimate_ratio(f.target, f.draws, f.target, f.draws, "U_direct", R"({"K": 3})", 4, &report,
                              nullptr) == WB_OK);
    CHECK(json::parse(take(report))["lambda_hat"].get<double>() == 0.0);
    CHECK(wb_estimate_ratio(f.target, f.draws, f.target, f.draws, "U_sideways", nullptr, 4, &report, nullptr) ==
          WB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("chain") {
    Fixture f;
    wb_mixture* mix = nullptr;
    REQUIRE(wb_fit(f.draws, R"({"K": 8})", 5, 1, &mix, nullptr) == WB_OK);
    const double w0 = 0.0;
    wb_samples* chain = nullptr;
    char* diag = nullptr;
    REQUIRE(wb_sample_chain(f.target, mix, &w0, 1, R"({"steps": 1000})", 3, &chain, &diag) == WB_OK);
    CHECK(wb_samples_size(chain) == 1000);
    const auto d = json::parse(take(diag));
    CHECK(d["steps"] == 1000);
    CHECK(d["unique_points"].get<std::size_t>() > 1);
    wb_samples_free(chain);
    const double outside = std::nan("");
    CHECK(wb_sample_chain(f.target, mix, &outside, 1, nullptr, 3, &chain, nullptr) != WB_OK);
    wb_mixture_free(mix);
}

TEST_CASE("replication is independent of thread count") {
    const char* exp = R"({"target": {"preset": "trimodal_gaussian_1d"}, "estimator": "mix",
                          "grid": [{"K": 3}], "n": 400, "reps": 6})";
    char* a = nullptr;
    char* a_csv = nullptr;
    char* b = nullptr;
    char* b_csv = nullptr;
    REQUIRE(wb_replicate(exp, 8, 1, &a, &a_csv, nullptr) == WB_OK);
    REQUIRE(wb_replicate(exp, 8, 4, &b, &b_csv, nullptr) == WB_OK);
    CHECK(take(a) == take(b));
    CHECK(take(a_csv) == take(b_csv));
    CHECK(wb_replicate(R"({"reps": 6, "n": 400, "grid": [{"K": 1}], "target": {"preset": "x"}})", 8, 1, &a,
                       nullptr, nullptr) == WB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("divergence by quadrature") {
    char* out = nullptr;
    REQUIRE(wb_divergence(R"({"p1": {"standard_normal": 1},
        "p2": {"mixture": {"dim": 1, "K": 1, "weights": [1], "means": [[1]], "scales": [[1]]}}})",
                          0, &out) == WB_OK);
    const auto r = json::parse(take(out));
    // The two unit normals cross at 1/2, so the overlap is 2 Phi(-1/2).
    CHECK(r["overlap"].get<double>() == doctest::Approx(std::erfc(0.5 / std::sqrt(2.0))).epsilon(1e-6));
    CHECK(wb_divergence(R"({"p1": {"standard_normal": 1}})", 0, &out) == WB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("external targets") {
    wb_target* ext = nullptr;
    const std::string cmd = std::string(WB_MOCK_EVALUATOR) + " --preset trimodal_gaussian_1d";
    REQUIRE(wb_target_external(cmd.c_str(), 1, 10.0, &ext) == WB_OK);
    CHECK(wb_target_dim(ext) == 1);
    Fixture f;
    char* a = nullptr;
    char* b = nullptr;
    REQUIRE(wb_estimate(f.target, f.draws, R"({"K": 3})", 2, &a, nullptr) == WB_OK);
    REQUIRE(wb_estimate(ext, f.draws, R"({"K": 3})", 2, &b, nullptr) == WB_OK);
    CHECK(json::parse(take(a))["lambda_hat"] == json::parse(take(b))["lambda_hat"]);
    wb_samples* none = nullptr;
    CHECK(wb_target_sample(ext, 10, 1, &none) == WB_ERR_INVALID_ARGUMENT);
    wb_target_free(ext);

    const std::string garbage = std::string(WB_MOCK_EVALUATOR) + " --garbage";
    REQUIRE(wb_target_external(garbage.c_str(), 1, 10.0, &ext) == WB_OK);
    CHECK(wb_estimate(ext, f.draws, R"({"K": 3})", 2, &a, nullptr) == WB_ERR_PROTOCOL);
    CHECK(std::string(wb_last_error()).find("banana") != std::string::npos);
    wb_target_free(ext);
}

TEST_CASE("last error is per thread") {
    wb_samples* s = nullptr;
    CHECK(wb_samples_create(0, 1, nullptr, &s) == WB_ERR_INVALID_ARGUMENT);
    const std::string mine = wb_last_error();
    std::thread other([] {
        char* out = nullptr;
        CHECK(wb_divergence("not json", 0, &out) == WB_ERR_INVALID_ARGUMENT);
    });
    other.join();
    CHECK(std::string(wb_last_error()) == mine);
}
