#include <stdio.h>
#include <stdlib.h>
#include "levelsel.h"

int main(void) {
    enum { W = 16, H = 12 };
    double px[W * H];
    for (int i = 0; i < W * H; i++) {
        int x = i % W, y = i / W;
        px[i] = (x > 4 && x < 11 && y > 3 && y < 9) ? 220.0 : 30.0 + (i * 37) % 7;
    }
    LsImage *img = NULL;
    LsSaliency *sal = NULL;
    if (ls_image_new(W, H, px, true, &img) != LS_OK) return 1;
    if (ls_saliency_compute(img, 1, &sal) != LS_OK) return 2;
    uint32_t labels[W * H];
    size_t regions = 0;
    if (ls_threshold(sal, ls_saliency_max(sal) * 0.5, labels, W * H, &regions) != LS_OK) return 3;
    if (ls_threshold(NULL, 0.0, labels, W * H, &regions) != LS_ERR_NULL) return 4;
    printf("%s %zu\n", ls_version(), regions);
    ls_saliency_free(sal);
    ls_image_free(img);
    return 0;
}
