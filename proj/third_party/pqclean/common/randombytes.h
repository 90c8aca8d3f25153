#ifndef RANDOMBYTES_H
#define RANDOMBYTES_H
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Supplied by the host library (fgv_crypto) over the system CSPRNG. */
int randombytes(uint8_t *buf, size_t n);

#ifdef __cplusplus
}
#endif

#endif
