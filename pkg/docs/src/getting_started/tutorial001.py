from adelic_slopes import canonical_polygon, degree, hermitian_bundle

# Z² with ‖e1‖ = 1/2 and ‖e2‖ = 1
bundle = hermitian_bundle([[1, 0], [0, 1]], [["1/4", 0], [0, 1]])

print(degree(bundle))  # log 2
polygon = canonical_polygon(bundle)
print(polygon.vertices)  # (0, log 2, log 2)
print(polygon.slopes)  # (log 2, 0)
