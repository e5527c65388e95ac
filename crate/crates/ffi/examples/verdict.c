/* Print the verdict for a config file.
 *
 *   cargo build -p skewmix-ffi --release
 *   cc -Icrates/ffi/include crates/ffi/examples/verdict.c \
 *      -Ltarget/release -lskewmix_ffi -o verdict
 *   LD_LIBRARY_PATH=target/release ./verdict configs/mixing_cos.toml
 */
#include <stdio.h>

#include "skewmix.h"

static const char *names[] = {
    "exponential_mixing",
    "essential_coboundary_integral",
    "essential_coboundary_non_integral",
    "inconclusive",
};

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s CONFIG.toml\n", argv[0]);
        return 2;
    }
    SkewmixLab *lab = NULL;
    SkewmixStatus st = skewmix_lab_from_file(argv[1], &lab);
    if (st != SKEWMIX_STATUS_OK) {
        fprintf(stderr, "skewmix: %s\n", skewmix_last_error());
        return (int)st;
    }
    SkewmixVerdict verdict;
    st = skewmix_lab_verdict(lab, &verdict, NULL);
    if (st != SKEWMIX_STATUS_OK) {
        fprintf(stderr, "skewmix: %s\n", skewmix_last_error());
        skewmix_lab_free(lab);
        return (int)st;
    }
    printf("%s\n", names[verdict]);
    skewmix_lab_free(lab);
    return 0;
}
