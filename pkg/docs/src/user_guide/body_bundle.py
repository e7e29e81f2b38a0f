from adelic_slopes import body_bundle, degree, john_bundle, lowner_bundle, mu_bracket
from adelic_slopes.convexgeom import cube

# Z² with the l^inf norm
square = body_bundle([[1, 0], [0, 1]], cube(2))

print(degree(square))  # log(4/π)
print(degree(john_bundle(square)), degree(lowner_bundle(square)))  # 0, log 2
for lower, upper in mu_bracket(square):
    print(lower, upper)
