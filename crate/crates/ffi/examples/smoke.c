#include "cepbp.h"
#include <stdio.h>

int main(void) {
    CepbpCorpus *corpus = NULL;
    if (cepbp_corpus_generate(50, 60, 4, 40, 7, &corpus) != CEPBP_STATUS_OK) {
        char msg[256];
        cepbp_last_error(msg, sizeof msg);
        fprintf(stderr, "generate failed: %s\n", msg);
        return 1;
    }
    printf("docs=%zu words=%zu nnz=%zu tokens=%llu\n",
           cepbp_corpus_num_docs(corpus), cepbp_corpus_vocab_size(corpus),
           cepbp_corpus_nnz(corpus), (unsigned long long)cepbp_corpus_total_tokens(corpus));

    CepbpTrainParams params = {CEPBP_ALGO_CEPBP, 3, 5, 2, 4, 1.0, 0.01, 0.01, 1};
    CepbpModel *model = NULL;
    if (cepbp_train(corpus, &params, &model) != CEPBP_STATUS_OK) {
        fprintf(stderr, "train failed\n");
        return 1;
    }
    double pp = 0.0;
    if (cepbp_perplexity(model, corpus, &pp) != CEPBP_STATUS_OK) return 1;
    printf("k=%zu perplexity=%.3f\n", cepbp_model_k(model), pp);

    double theta[3];
    if (cepbp_model_theta_col(model, 0, theta, 3) != CEPBP_STATUS_OK) return 1;
    printf("theta0 = %.3f %.3f %.3f\n", theta[0], theta[1], theta[2]);

    cepbp_model_free(model);
    cepbp_corpus_free(corpus);
    return 0;
}
