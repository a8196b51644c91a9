/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef BASENODE_H
#define BASENODE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum BnStatus {
  BN_STATUS_OK = 0,
  BN_STATUS_NULL_ARGUMENT = 1,
  BN_STATUS_INVALID_INPUT = 2,
  BN_STATUS_IO = 3,
  BN_STATUS_CHECKSUM_MISMATCH = 4,
  BN_STATUS_VERSION_UNSUPPORTED = 5,
  BN_STATUS_SIZE_EXCEEDS_BASE = 6,
  BN_STATUS_SEED_COLLISION = 7,
  BN_STATUS_BUFFER_TOO_SMALL = 8,
  BN_STATUS_PANIC = 9,
  BN_STATUS_OTHER = 10,
} BnStatus;

// Immutable pool handle.
typedef struct BnBase BnBase;

// Immutable seed registry handle.
typedef struct BnRegistry BnRegistry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, identical to the `basenode` crate version.
const char *bn_version(void);

// Message for the last failed call on this thread, or an empty string.
// The pointer stays valid until the next `bn_*` call on this thread.
const char *bn_last_error(void);

// Opens a pool file written by `basenode gen-base`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum BnStatus bn_base_open(const char *path, struct BnBase **out);

// Builds a pool from a distribution name (`uniform`, `explosion`,
// `rotation`, `x-c`, `x-rc`), a problem (`tsp`, `cvrp`), a size and a seed.
// A `capacity` of 0 keeps the default rule. The result has the same
// `base_id` as `basenode gen-base` with equal arguments.
//
// # Safety
// `dist` and `problem` must be NUL-terminated strings and `out` a writable pointer.
enum BnStatus bn_base_build(const char *dist,
                            const char *problem,
                            size_t n_base,
                            uint64_t seed,
                            uint32_t capacity,
                            struct BnBase **out);

// Releases a pool handle. Null is ignored.
//
// # Safety
// `handle` must come from `bn_base_open`/`bn_base_build` and not be used afterwards.
void bn_base_free(struct BnBase *handle);

// Pool size, or 0 for a null handle.
//
// # Safety
// `handle` must be null or a live pool handle.
size_t bn_base_n_base(const struct BnBase *handle);

// Vehicle capacity for CVRP pools, 0 for TSP pools or a null handle.
//
// # Safety
// `handle` must be null or a live pool handle.
uint32_t bn_base_capacity(const struct BnBase *handle);

// Whether the pool carries a depot and demands.
//
// # Safety
// `handle` must be null or a live pool handle.
bool bn_base_is_cvrp(const struct BnBase *handle);

// Content identifier of the pool, owned by the handle. Null for a null handle.
//
// # Safety
// `handle` must be null or a live pool handle.
const char *bn_base_id(const struct BnBase *handle);

// Rows per sampled instance: `n`, plus one depot row for CVRP pools.
//
// # Safety
// `handle` must be null or a live pool handle.
size_t bn_epoch_rows(const struct BnBase *handle, size_t n);

// Opens a seed registry file. A missing file yields an empty registry.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum BnStatus bn_registry_open(const char *path, struct BnRegistry **out);

// Releases a registry handle. Null is ignored.
//
// # Safety
// `handle` must come from `bn_registry_open` and not be used afterwards.
void bn_registry_free(struct BnRegistry *handle);

// Samples `l_epoch` training instances of `n` customers for one epoch.
//
// `coords` receives `l_epoch * rows * 2` doubles (x, y per row) and
// `demands`, if not null, `l_epoch * rows` integers, where `rows` is
// [`bn_epoch_rows`]. Row 0 of every CVRP instance is the depot. The bytes
// equal those of `basenode subsample --role epoch` for the same arguments.
// With a non-null `registry`, a registered test seed is refused.
//
// # Safety
// `base` must be a live pool handle, `registry` null or a live registry
// handle, and each buffer valid for writes of its stated length.
enum BnStatus bn_sample_epoch(const struct BnBase *base,
                              const struct BnRegistry *registry,
                              size_t n,
                              uint64_t train_seed,
                              uint64_t epoch,
                              size_t l_epoch,
                              double *coords,
                              size_t coords_len,
                              uint32_t *demands,
                              size_t demands_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BASENODE_H */
