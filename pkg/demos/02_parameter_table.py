"""Per-layer parameter breakdown of the four compared models."""

# %%
from scnn.models import VARIANTS, ModelConfig, build_model, count_params

for variant in VARIANTS:
    model = build_model(ModelConfig(variant), seed=None)
    print(f"{variant}: {count_params(model):,} trunk parameters "
          f"({count_params(model, include_embedding=True):,} with the embedding table)")
    for p in model.parameters()[1:]:
        print(f"    {p.name:<28}{str(p.shape):<16}{p.size:>10,}")
    print()

# %%
# The CNN trunk: a 100x100 kernel over the 140x100 embedded tweet leaves
# 41x1 positions; max-pooling by 20 (ceil) leaves 3 per channel.
cnn = build_model(ModelConfig("cnn"), seed=None)
shape = (140,)
for layer in cnn.layers:
    shape = layer.output_shape(shape)
    print(f"{type(layer).__name__:<10} -> {shape}")
