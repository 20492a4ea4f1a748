/** Fixture class Delta: three focal methods for the end-to-end run. */
public class Delta {
    private final int base;

    public Delta(int base) {
        this.base = base;
    }

    /** Combines the base with the given factor. */
    public int deltaStack(int factor) {
        return base + factor;
    }

    /** Combines the base with the given factor. */
    public int deltaBraid(int factor) {
        return base - factor;
    }

    /** Combines the base with the given factor. */
    public int deltaSlice(int factor) {
        return base * factor;
    }
}
