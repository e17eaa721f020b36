// Exercises the shared-library boundary: status codes, error messages,
// config round trips and the file-producing entry points.
#include <cassert>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "flowalign/flowalign.h"

namespace fs = std::filesystem;

static int g_failures = 0;

#define EXPECT(cond)                                                       \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::fprintf(stderr, "FAILED %s:%d: %s\n", __FILE__, __LINE__,       \
                   #cond);                                                 \
      ++g_failures;                                                        \
    }                                                                      \
  } while (0)

int main() {
  fs::path work = fs::temp_directory_path() / "fa_capi_test";
  fs::remove_all(work);
  fs::create_directories(work);

  EXPECT(fa_version() != nullptr);
  EXPECT(fa_last_error() != nullptr);

  // bad inputs produce codes and messages, not crashes
  fa_context* ctx = nullptr;
  EXPECT(fa_context_create("/no/such/config.cfg", &ctx) != FA_OK);
  EXPECT(ctx == nullptr);
  EXPECT(std::strlen(fa_last_error()) > 0);
  EXPECT(fa_context_create(nullptr, nullptr) == FA_ERR_INVALID_ARG);
  EXPECT(fa_context_set(nullptr, "edit.omega", "1") == FA_ERR_INVALID_ARG);

  // default-constructed context
  EXPECT(fa_context_create(nullptr, &ctx) == FA_OK);
  EXPECT(ctx != nullptr);

  char buf[64];
  EXPECT(fa_context_get(ctx, "edit.omega", buf, sizeof(buf)) == FA_OK);
  EXPECT(std::string(buf) == "7.5");
  EXPECT(fa_context_set(ctx, "edit.omega", "3.25") == FA_OK);
  EXPECT(fa_context_get(ctx, "edit.omega", buf, sizeof(buf)) == FA_OK);
  EXPECT(std::string(buf) == "3.25");
  EXPECT(fa_context_set(ctx, "edit.bogus", "1") == FA_ERR_INVALID_ARG);
  EXPECT(fa_context_get(ctx, "edit.bogus", buf, sizeof(buf)) ==
         FA_ERR_INVALID_ARG);
  char tiny[3];
  EXPECT(fa_context_get(ctx, "edit.omega", tiny, sizeof(tiny)) == FA_OK);
  EXPECT(std::string(tiny) == "3.");  // truncated, still terminated
  EXPECT(fa_context_get(ctx, "edit.omega", nullptr, 0) == FA_ERR_INVALID_ARG);

  // fast analytic pipeline through the boundary
  EXPECT(fa_context_set(ctx, "model.source", "analytic") == FA_OK);
  EXPECT(fa_context_set(ctx, "run.tasks", "2") == FA_OK);
  EXPECT(fa_context_set(ctx, "run.seeds", "2") == FA_OK);
  EXPECT(fa_context_set(ctx, "edit.steps", "10") == FA_OK);
  EXPECT(fa_context_set(ctx, "edit.omega", "7.5") == FA_OK);

  fs::path edit_dir = work / "edit";
  EXPECT(fa_edit(ctx, 0, edit_dir.string().c_str()) == FA_OK);
  EXPECT(fs::exists(edit_dir / "metrics.csv"));
  EXPECT(fs::exists(edit_dir / "manifest.txt"));

  fs::path rev_dir = work / "rev";
  EXPECT(fa_edit(ctx, 1, rev_dir.string().c_str()) == FA_OK);
  EXPECT(fs::exists(rev_dir / "metrics.csv"));

  fs::path gen_dir = work / "gen";
  EXPECT(fa_generate(ctx, 3, gen_dir.string().c_str()) == FA_OK);
  EXPECT(fs::exists(gen_dir / "samples.csv"));
  EXPECT(fa_generate(ctx, 0, gen_dir.string().c_str()) == FA_ERR_INVALID_ARG);

  fs::path sweep_dir = work / "sweep";
  EXPECT(fa_sweep(ctx, "zeta", "0,0.05", sweep_dir.string().c_str()) == FA_OK);
  EXPECT(fs::exists(sweep_dir / "sweep.csv"));
  EXPECT(fs::exists(sweep_dir / "sweep.svg"));
  EXPECT(fa_sweep(ctx, "volume", "1,2", sweep_dir.string().c_str()) ==
         FA_ERR_INVALID_ARG);

  fs::path plot = work / "plot.svg";
  EXPECT(fa_export_plot((edit_dir / "metrics.csv").string().c_str(),
                        plot.string().c_str()) == FA_OK);
  EXPECT(fs::exists(plot));
  EXPECT(fa_export_plot("/no/such/metrics.csv", plot.string().c_str()) !=
         FA_OK);

  fs::path distill_dir = work / "distill";
  EXPECT(fa_context_set(ctx, "distill.steps", "120") == FA_OK);
  EXPECT(fa_distill(ctx, distill_dir.string().c_str()) == FA_OK);
  EXPECT(fs::exists(distill_dir / "distill_result.csv"));
  EXPECT(fs::exists(distill_dir / "distill_trace.csv"));

  int n_failed = -1;
  fs::path oc_dir = work / "oc";
  EXPECT(fa_verify_oc(oc_dir.string().c_str(), &n_failed) == FA_OK);
  EXPECT(n_failed == 0);
  EXPECT(fs::exists(oc_dir / "oc_report.csv"));

  // determinism through the boundary: re-run from the emitted manifest
  fa_context* ctx2 = nullptr;
  EXPECT(fa_context_create((edit_dir / "manifest.txt").string().c_str(),
                           &ctx2) == FA_OK);
  fs::path edit2_dir = work / "edit2";
  EXPECT(fa_edit(ctx2, 0, edit2_dir.string().c_str()) == FA_OK);
  {
    std::ifstream a(edit_dir / "metrics.csv", std::ios::binary);
    std::ifstream b(edit2_dir / "metrics.csv", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)),
                   std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)),
                   std::istreambuf_iterator<char>());
    EXPECT(!sa.empty());
    EXPECT(sa == sb);
  }
  fa_context_destroy(ctx2);
  fa_context_destroy(ctx);
  fa_context_destroy(nullptr);  // tolerated

  fs::remove_all(work);
  if (g_failures > 0) {
    std::fprintf(stderr, "%d failure(s)\n", g_failures);
    return 1;
  }
  std::printf("all C API checks passed\n");
  return 0;
}
