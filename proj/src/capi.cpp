#include "flowalign/flowalign.h"

#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"

namespace {

thread_local std::string g_last_error;

fa_status fail(fa_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Maps exceptions onto status codes; runs fn inside a catch-all so no
// exception crosses the C boundary.
template <typename Fn>
fa_status guarded(Fn&& fn) {
  try {
    fn();
    return FA_OK;
  } catch (const std::invalid_argument& e) {
    return fail(FA_ERR_INVALID_ARG, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(FA_ERR_IO, e.what());
  } catch (const std::runtime_error& e) {
    // io-ish messages come through runtime_error from the file writers
    std::string what = e.what();
    if (what.find("cannot open") != std::string::npos ||
        what.find("cannot write") != std::string::npos ||
        what.find("checkpoint") != std::string::npos)
      return fail(FA_ERR_IO, what);
    return fail(FA_ERR_NUMERIC, what);
  } catch (const std::bad_alloc&) {
    return fail(FA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FA_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FA_ERR_INTERNAL, "unknown error");
  }
}

std::string require(const char* s, const char* what) {
  if (s == nullptr || *s == '\0')
    throw std::invalid_argument(std::string(what) + " must be non-empty");
  return s;
}

}  // namespace

struct fa_context {
  fa::Config cfg;
};

extern "C" {

const char* fa_version(void) { return "1.0.0"; }

const char* fa_last_error(void) { return g_last_error.c_str(); }

fa_status fa_context_create(const char* config_path, fa_context** out) {
  if (out == nullptr) return fail(FA_ERR_INVALID_ARG, "out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto ctx = new fa_context;
    try {
      if (config_path != nullptr && *config_path != '\0')
        ctx->cfg = fa::Config::load_file(config_path);
    } catch (...) {
      delete ctx;
      throw;
    }
    *out = ctx;
  });
}

void fa_context_destroy(fa_context* ctx) { delete ctx; }

fa_status fa_context_set(fa_context* ctx, const char* key, const char* value) {
  if (ctx == nullptr) return fail(FA_ERR_INVALID_ARG, "null context");
  return guarded([&] {
    ctx->cfg.set(require(key, "key"), value == nullptr ? "" : value);
  });
}

fa_status fa_context_get(const fa_context* ctx, const char* key, char* buf,
                         size_t cap) {
  if (ctx == nullptr) return fail(FA_ERR_INVALID_ARG, "null context");
  if (buf == nullptr || cap == 0)
    return fail(FA_ERR_INVALID_ARG, "buffer must have room");
  return guarded([&] {
    const std::string& v = ctx->cfg.get(require(key, "key"));
    std::strncpy(buf, v.c_str(), cap - 1);
    buf[cap - 1] = '\0';
  });
}

fa_status fa_train(fa_context* ctx, const char* out_dir) {
  if (ctx == nullptr) return fail(FA_ERR_INVALID_ARG, "null context");
  return guarded([&] { fa::train_to_dir(ctx->cfg, require(out_dir, "out_dir")); });
}

fa_status fa_generate(fa_context* ctx, int n_samples, const char* out_dir) {
  if (ctx == nullptr) return fail(FA_ERR_INVALID_ARG, "null context");
  if (n_samples < 1) return fail(FA_ERR_INVALID_ARG, "n_samples must be >= 1");
  return guarded([&] {
    fa::generate_to_dir(ctx->cfg, n_samples, require(out_dir, "out_dir"));
  });
}

fa_status fa_edit(fa_context* ctx, int reverse, const char* out_dir) {
  if (ctx == nullptr) return fail(FA_ERR_INVALID_ARG, "null context");
  return guarded([&] {
    fa::run(ctx->cfg, require(out_dir, "out_dir"), reverse != 0);
  });
}

fa_status fa_sweep(fa_context* ctx, const char* axis, const char* values,
                   const char* out_dir) {
  if (ctx == nullptr) return fail(FA_ERR_INVALID_ARG, "null context");
  return guarded([&] {
    std::vector<std::string> vals;
    std::stringstream ss(require(values, "values"));
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) vals.push_back(item);
    fa::sweep(ctx->cfg, require(axis, "axis"), vals,
              require(out_dir, "out_dir"));
  });
}

fa_status fa_verify_oc(const char* out_dir, int* n_failed) {
  return guarded([&] {
    auto checks = fa::verify_oc(out_dir == nullptr ? "" : out_dir);
    int failed = 0;
    for (const auto& c : checks)
      if (!c.pass) ++failed;
    if (n_failed != nullptr) *n_failed = failed;
  });
}

fa_status fa_distill(fa_context* ctx, const char* out_dir) {
  if (ctx == nullptr) return fail(FA_ERR_INVALID_ARG, "null context");
  return guarded([&] {
    fa::distill_to_dir(ctx->cfg, require(out_dir, "out_dir"));
  });
}

fa_status fa_export_plot(const char* metrics_csv, const char* out_svg) {
  return guarded([&] {
    fa::export_plot(require(metrics_csv, "metrics_csv"),
                    require(out_svg, "out_svg"));
  });
}

}  // extern "C"
