#pragma once

// Minimal zstd streaming API declarations. The target system ships the
// shared library without development headers, so the subset we use is
// declared here when <zstd.h> is unavailable. Layouts match the stable
// public ABI (zstd >= 1.4).

#if defined(__has_include) && __has_include(<zstd.h>)
#include <zstd.h>
#else

#include <cstddef>

extern "C" {

typedef struct ZSTD_CCtx_s ZSTD_CCtx;
typedef struct ZSTD_DCtx_s ZSTD_DCtx;

typedef struct ZSTD_inBuffer_s {
  const void* src;
  size_t size;
  size_t pos;
} ZSTD_inBuffer;

typedef struct ZSTD_outBuffer_s {
  void* dst;
  size_t size;
  size_t pos;
} ZSTD_outBuffer;

typedef enum {
  ZSTD_e_continue = 0,
  ZSTD_e_flush = 1,
  ZSTD_e_end = 2
} ZSTD_EndDirective;

typedef enum {
  ZSTD_c_compressionLevel = 100
} ZSTD_cParameter;

ZSTD_CCtx* ZSTD_createCCtx(void);
size_t ZSTD_freeCCtx(ZSTD_CCtx*);
size_t ZSTD_CCtx_setParameter(ZSTD_CCtx*, ZSTD_cParameter, int value);
size_t ZSTD_compressStream2(ZSTD_CCtx*, ZSTD_outBuffer*, ZSTD_inBuffer*, ZSTD_EndDirective);

ZSTD_DCtx* ZSTD_createDCtx(void);
size_t ZSTD_freeDCtx(ZSTD_DCtx*);
size_t ZSTD_decompressStream(ZSTD_DCtx*, ZSTD_outBuffer*, ZSTD_inBuffer*);

size_t ZSTD_CStreamInSize(void);
size_t ZSTD_CStreamOutSize(void);
size_t ZSTD_DStreamInSize(void);
size_t ZSTD_DStreamOutSize(void);

unsigned ZSTD_isError(size_t code);
const char* ZSTD_getErrorName(size_t code);

}  // extern "C"

#endif
