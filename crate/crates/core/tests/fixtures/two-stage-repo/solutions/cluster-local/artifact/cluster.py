import json

POINTS = [0.1, 0.2, 0.15, 0.9, 0.85, 0.95]


def main():
    centers = [min(POINTS), max(POINTS)]
    labels = [min(range(2), key=lambda c: abs(p - centers[c])) for p in POINTS]
    print(json.dumps({"points": POINTS, "labels": labels}))


if __name__ == "__main__":
    main()
