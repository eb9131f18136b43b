"""Builds tiny local RoBERTa-family checkpoints for tests.

The sandbox has no model-hub access, so transformer tests construct a
word-level tokenizer from the fixture corpus and pair it with a small
randomly-initialized RoBERTa configuration saved to a local directory;
the directory path then serves as the encoder checkpoint identifier.
"""

from __future__ import annotations

from pathlib import Path

SPECIALS = ["<s>", "<pad>", "</s>", "<unk>", "<mask>"]


def build_tiny_encoder(out_dir: Path, texts: list[str], hidden_size: int = 96,
                       num_layers: int = 2, num_heads: int = 4,
                       seed: int = 0) -> Path:
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers, processors
    from transformers import (
        PreTrainedTokenizerFast,
        RobertaConfig,
        RobertaForSequenceClassification,
    )

    words = sorted({w for text in texts for w in text.split()})
    vocab = {token: idx for idx, token in enumerate(SPECIALS + words)}

    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tok.post_processor = processors.RobertaProcessing(
        sep=("</s>", vocab["</s>"]), cls=("<s>", vocab["<s>"])
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        bos_token="<s>", eos_token="</s>", sep_token="</s>", cls_token="<s>",
        pad_token="<pad>", unk_token="<unk>", mask_token="<mask>",
        model_max_length=512,
    )

    config = RobertaConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=514,
        num_labels=1,
        pad_token_id=vocab["<pad>"],
        bos_token_id=vocab["<s>"],
        eos_token_id=vocab["</s>"],
    )
    torch.manual_seed(seed)
    model = RobertaForSequenceClassification(config)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fast.save_pretrained(out_dir)
    model.save_pretrained(out_dir)
    return out_dir
