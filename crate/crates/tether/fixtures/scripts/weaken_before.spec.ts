import { test, expect } from '@playwright/test';

test('result count matches the filter', async ({ page }) => {
  await page.goto('/app/search');
  const value = await page.locator('[data-test=result-count]').count();
  expect(value).toBe(5);
});
